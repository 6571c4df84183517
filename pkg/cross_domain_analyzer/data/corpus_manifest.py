"""
Module for reading and writing corpus manifests.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional

import numpy as np
import yaml

from cross_domain_analyzer.data.video_data import VideoRecord, validate_record
from cross_domain_analyzer.errors import InvalidConfig, MissingFeatures
from cross_domain_analyzer.logger import logger

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
DEFAULT_FPS = 30.0


@dataclass(frozen=True)
class CorpusManifest:
    """
    Records of one corpus plus its declared streams and frame rate.

    Attributes
    ----------
    records : list of VideoRecord
        Videos in manifest order.
    streams : dict
        Stream name to declared feature dimension.
    fps : float
        Frame rate the features were extracted at.
    labeled : bool
        Whether the corpus is a weakly-labeled training set.
    classes : list of str
        Declared anomaly classes, empty when the corpus has none.
    root : str
        Directory the manifest was read from.
    """
    records: List[VideoRecord]
    streams: Dict[str, int]
    fps: float = DEFAULT_FPS
    labeled: bool = False
    classes: List[str] = field(default_factory=list)
    root: str = "."

    def __post_init__(self):
        for record in self.records:
            validate_record(record, labeled=self.labeled, classes_declared=bool(self.classes))
            missing = set(self.streams) - set(record.stream_refs)
            if missing:
                raise MissingFeatures(f"{record.video_id} lacks blobs for streams {sorted(missing)}.")

    def __len__(self):
        return len(self.records)

    @property
    def abnormal(self) -> List[VideoRecord]:
        return [record for record in self.records if record.weak_label == 1]

    @property
    def normal(self) -> List[VideoRecord]:
        return [record for record in self.records if record.weak_label == 0]

    @property
    def has_frame_labels(self) -> bool:
        return bool(self.records) and all(record.frame_labels is not None for record in self.records)

    def record(self, video_id: str) -> VideoRecord:
        """
        Record with the given id.
        """
        for record in self.records:
            if record.video_id == video_id:
                return record
        raise KeyError(video_id)

    def with_records(self, records: Iterable[VideoRecord], labeled: Optional[bool] = None) -> "CorpusManifest":
        """
        Copy of the manifest holding other records.
        """
        return replace(
            self,
            records=list(records),
            labeled=self.labeled if labeled is None else labeled
        )


def _resolve(root: str, path: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(root, path))


def _relative(root: str, path: str) -> str:
    return os.path.relpath(path, root) if os.path.isabs(path) else path


def load_manifest(path: str) -> CorpusManifest:
    """
    Reads a YAML manifest. Blob and label paths are resolved against the manifest's directory.

    Parameters
    ----------
    path : str
        Manifest file.

    Returns
    -------
    CorpusManifest
        Parsed and validated manifest.
    """
    root = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8") as handle:
        document = yaml.safe_load(handle)
    if not isinstance(document, dict) or "records" not in document or "streams" not in document:
        raise InvalidConfig(f"{path} is not a corpus manifest.")

    records = []
    for entry in document["records"]:
        frame_labels = None
        labels_path = _resolve(root, entry.get("frame_labels_path"))
        if labels_path is not None:
            frame_labels = np.load(labels_path)
        records.append(VideoRecord(
            video_id=str(entry["video_id"]),
            domain=str(entry["domain"]),
            n_frames=int(entry["n_frames"]),
            weak_label=None if entry.get("weak_label") is None else int(entry["weak_label"]),
            frame_labels=frame_labels,
            anomaly_class=entry.get("anomaly_class"),
            stream_refs={name: _resolve(root, ref) for name, ref in entry["streams"].items()},
        ))

    manifest = CorpusManifest(
        records=records,
        streams={name: int(dim) for name, dim in document["streams"].items()},
        fps=float(document.get("fps", DEFAULT_FPS)),
        labeled=bool(document.get("labeled", False)),
        classes=list(document.get("classes") or []),
        root=root,
    )
    logger.info("Loaded %d records from %s.", len(records), path)
    return manifest


def save_manifest(manifest: CorpusManifest, path: str, labels_dir: str = "labels"):
    """
    Writes a manifest as YAML, storing frame labels as ``.npy`` files next to it.

    Parameters
    ----------
    manifest : CorpusManifest
        Manifest to write.
    path : str
        Target manifest file.
    labels_dir : str
        Directory, relative to the manifest, for frame label files.
    """
    root = os.path.dirname(os.path.abspath(path))
    os.makedirs(os.path.join(root, labels_dir), exist_ok=True)

    entries = []
    for record in manifest.records:
        entry = {
            "video_id": record.video_id,
            "domain": record.domain,
            "n_frames": int(record.n_frames),
            "streams": {name: _relative(root, ref) for name, ref in record.stream_refs.items()},
        }
        if record.weak_label is not None:
            entry["weak_label"] = int(record.weak_label)
        if record.anomaly_class is not None:
            entry["anomaly_class"] = record.anomaly_class
        if record.frame_labels is not None:
            labels_path = os.path.join(labels_dir, f"{record.video_id}.npy")
            np.save(os.path.join(root, labels_path), np.asarray(record.frame_labels, dtype=np.uint8))
            entry["frame_labels_path"] = labels_path
        entries.append(entry)

    document = {
        "version": MANIFEST_VERSION,
        "fps": float(manifest.fps),
        "labeled": bool(manifest.labeled),
        "classes": list(manifest.classes),
        "streams": {name: int(dim) for name, dim in manifest.streams.items()},
        "records": entries,
    }
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(document, handle, sort_keys=False)
    logger.info("Wrote manifest with %d records to %s.", len(entries), path)
