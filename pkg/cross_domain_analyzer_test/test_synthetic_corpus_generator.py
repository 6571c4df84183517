from dataclasses import replace

import numpy as np
import pytest

from cross_domain_analyzer.data import FeatureStore, SynthSpec, SyntheticCorpusGenerator, generate, load_manifest
from cross_domain_analyzer.data.feature_store import read_blob
from cross_domain_analyzer.errors import InvalidSpec
from cross_domain_analyzer.evaluation.metrics import roc_auc, segment_to_frame
from cross_domain_analyzer.utilities import directory_digest


@pytest.mark.parametrize("overrides", [
    {"rho": 1.5},
    {"anomaly_magnitude": -1.0},
    {"frames_range": (10, 5)},
    {"source_classes": ["unknown"]},
])
def test_invalid_specs_are_rejected(overrides):
    with pytest.raises(InvalidSpec):
        SynthSpec(**overrides)


def test_unknown_spec_key_is_rejected():
    with pytest.raises(InvalidSpec):
        SynthSpec.from_dict({"colour": "red"})


def test_spec_dict_round_trip(tiny_spec):
    assert SynthSpec.from_dict(tiny_spec.to_dict()) == tiny_spec


def test_splits_and_label_bookkeeping(tiny_corpus, tiny_spec):
    assert set(tiny_corpus) == {"labeled", "external", "test_source", "test_target"}
    labeled = load_manifest(tiny_corpus["labeled"])
    external = load_manifest(tiny_corpus["external"])
    test_target = load_manifest(tiny_corpus["test_target"])

    assert labeled.labeled and len(labeled) == tiny_spec.n_labeled
    assert all(record.frame_labels is None for record in labeled.records)
    assert all(record.weak_label is None for record in external.records)
    assert external.has_frame_labels
    for record in test_target.records:
        assert record.weak_label == int(record.frame_labels.any())
        assert (record.anomaly_class is not None) == bool(record.weak_label)
    assert {r.anomaly_class for r in labeled.abnormal} <= set(tiny_spec.source_classes)


def test_blobs_pass_validation_with_declared_shapes(tiny_corpus, tiny_spec):
    manifest = load_manifest(tiny_corpus["test_target"])
    for record in manifest.records:
        main = read_blob(record.stream_refs["main"])
        aux = read_blob(record.stream_refs["aux"])
        assert main.shape == (record.n_frames, tiny_spec.dim_main)
        assert aux.shape == (int(np.ceil(record.n_frames / tiny_spec.clip_length)), tiny_spec.dim_aux)


def test_same_seed_gives_identical_corpus(tmp_path, tiny_spec):
    spec = replace(tiny_spec, n_labeled=4, n_external=4, n_test_source=2, n_test_target=2)
    generate(spec, str(tmp_path / "a"))
    generate(spec, str(tmp_path / "b"))
    assert directory_digest(str(tmp_path / "a")) == directory_digest(str(tmp_path / "b"))


def test_domain_shift_moves_the_feature_mean(tiny_spec):
    spec = replace(tiny_spec, domain_shift=2.0, noise_scale=1.0)
    generator = SyntheticCorpusGenerator(spec)
    source = np.concatenate([generator.generate_video("source")[0] for _ in range(40)])
    target = np.concatenate([generator.generate_video("target")[0] for _ in range(40)])
    offset = np.linalg.norm(target.mean(axis=0) - source.mean(axis=0))
    standard_error = np.sqrt(spec.dim_main * (1.0 / len(source) + 1.0 / len(target)))
    assert abs(offset - spec.domain_shift) <= 3 * standard_error


def test_planted_anomalies_are_separable_by_nearest_centroid(tmp_path, tiny_spec):
    spec = replace(tiny_spec, anomaly_magnitude=8.0, n_labeled=20, n_test_target=20)
    paths = generate(spec, str(tmp_path))
    labeled = load_manifest(paths["labeled"])
    test = load_manifest(paths["test_target"])

    normal_frames = np.concatenate([read_blob(r.stream_refs["main"]).data for r in labeled.normal])
    centroid = normal_frames.mean(axis=0)
    scores = np.concatenate([
        np.linalg.norm(read_blob(r.stream_refs["main"]).data - centroid, axis=1) for r in test.records
    ])
    labels = np.concatenate([r.frame_labels for r in test.records])
    assert roc_auc(scores, labels) > 0.95


def test_zero_magnitude_plants_no_signal(tmp_path, tiny_spec):
    spec = replace(tiny_spec, anomaly_magnitude=0.0, n_test_target=40, frames_range=(60, 100))
    test = load_manifest(generate(spec, str(tmp_path))["test_target"])
    store = FeatureStore()
    frame_scores = np.concatenate([
        segment_to_frame(store.load(r, "main", 8)[:, 0], r.n_frames).scores for r in test.records
    ])
    labels = np.concatenate([r.frame_labels for r in test.records])
    assert labels.any()
    assert abs(roc_auc(frame_scores, labels) - 0.5) < 0.15
