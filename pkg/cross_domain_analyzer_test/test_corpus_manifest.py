import numpy as np
import pytest
import yaml

from cross_domain_analyzer.data.corpus_manifest import CorpusManifest, load_manifest, save_manifest
from cross_domain_analyzer.data.feature_store import write_blob
from cross_domain_analyzer.data.video_data import VideoRecord
from cross_domain_analyzer.errors import InvalidConfig, MissingFeatures


def write_corpus(tmp_path):
    records = []
    for index, label in enumerate([1, 0]):
        ref = tmp_path / "blobs" / f"v{index}.cdlf"
        write_blob(np.ones((5, 4), dtype=np.float32), str(ref))
        records.append(VideoRecord(
            video_id=f"v{index}",
            domain="source",
            n_frames=5,
            weak_label=label,
            frame_labels=np.array([0, 1, 1, 0, 0]) * label,
            anomaly_class="theft" if label else None,
            stream_refs={"main": str(ref)},
        ))
    return CorpusManifest(records=records, streams={"main": 4}, labeled=True, classes=["theft"], root=str(tmp_path))


def test_save_then_load_keeps_records(tmp_path):
    manifest = write_corpus(tmp_path)
    path = str(tmp_path / "manifest.yaml")
    save_manifest(manifest, path)

    loaded = load_manifest(path)
    assert loaded.records == manifest.records
    assert loaded.streams == {"main": 4}
    assert loaded.labeled and loaded.classes == ["theft"]
    assert [r.video_id for r in loaded.abnormal] == ["v0"]
    assert [r.video_id for r in loaded.normal] == ["v1"]


def test_saved_paths_are_relative(tmp_path):
    path = str(tmp_path / "manifest.yaml")
    save_manifest(write_corpus(tmp_path), path)
    with open(path, encoding="utf-8") as handle:
        document = yaml.safe_load(handle)
    assert document["records"][0]["streams"]["main"] == "blobs/v0.cdlf"
    assert document["records"][0]["frame_labels_path"] == "labels/v0.npy"


def test_manifest_requires_every_declared_stream(tmp_path):
    manifest = write_corpus(tmp_path)
    with pytest.raises(MissingFeatures):
        CorpusManifest(records=manifest.records, streams={"main": 4, "aux": 2})


def test_non_manifest_yaml_is_rejected(tmp_path):
    path = tmp_path / "other.yaml"
    path.write_text("foo: 1\n", encoding="utf-8")
    with pytest.raises(InvalidConfig):
        load_manifest(str(path))


def test_record_lookup(labeled):
    first = labeled.records[0]
    assert labeled.record(first.video_id) is first
    with pytest.raises(KeyError):
        labeled.record("missing")
