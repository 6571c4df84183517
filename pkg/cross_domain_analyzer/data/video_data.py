"""
Core domain types shared by the data, models and evaluation packages.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
import torch

from cross_domain_analyzer.errors import LengthMismatch, MissingLabel, NonFiniteData, ShapeMismatch
from cross_domain_analyzer.processing_types import Heads

EXTERNAL_DOMAIN = "external"


def _frozen_array(values, dtype) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class VideoRecord:
    """
    One video of a corpus: identity, domain, frame count, optional labels and the
    locators of its feature streams.

    Attributes
    ----------
    video_id : str
        Unique identifier inside the corpus.
    domain : str
        Domain tag, e.g. ``"source"`` or ``"external"``.
    n_frames : int
        Number of decoded frames at the corpus FPS.
    weak_label : int or None
        Video-level label, 1 when the video contains an anomaly.
    frame_labels : numpy.ndarray or None
        Dense 0/1 vector of length ``n_frames``.
    anomaly_class : str or None
        Free-form anomaly class name.
    stream_refs : Mapping[str, str]
        Stream name to feature blob locator.
    """
    video_id: str
    domain: str
    n_frames: int
    weak_label: Optional[int] = None
    frame_labels: Optional[np.ndarray] = None
    anomaly_class: Optional[str] = None
    stream_refs: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.frame_labels is not None:
            object.__setattr__(self, "frame_labels", _frozen_array(self.frame_labels, np.uint8))
        object.__setattr__(self, "stream_refs", dict(self.stream_refs))

    def __eq__(self, other):
        if not isinstance(other, VideoRecord):
            return NotImplemented
        if (self.frame_labels is None) != (other.frame_labels is None):
            return False
        same_labels = self.frame_labels is None or np.array_equal(self.frame_labels, other.frame_labels)
        return (
            same_labels
            and self.video_id == other.video_id
            and self.domain == other.domain
            and self.n_frames == other.n_frames
            and self.weak_label == other.weak_label
            and self.anomaly_class == other.anomaly_class
            and dict(self.stream_refs) == dict(other.stream_refs)
        )

    def __hash__(self):
        return hash((self.video_id, self.domain, self.n_frames))

    @property
    def is_abnormal(self) -> bool:
        """
        True when the weak label marks the video as anomalous.
        """
        return self.weak_label == 1

    def to_dict(self) -> dict:
        """
        Plain mapping of the record, frame labels as a list of ints.
        """
        return {
            "video_id": self.video_id,
            "domain": self.domain,
            "n_frames": int(self.n_frames),
            "weak_label": None if self.weak_label is None else int(self.weak_label),
            "frame_labels": None if self.frame_labels is None else self.frame_labels.astype(int).tolist(),
            "anomaly_class": self.anomaly_class,
            "stream_refs": dict(self.stream_refs),
        }

    @classmethod
    def from_dict(cls, values: Mapping) -> "VideoRecord":
        """
        Inverse of ``to_dict``.
        """
        return cls(
            video_id=str(values["video_id"]),
            domain=str(values["domain"]),
            n_frames=int(values["n_frames"]),
            weak_label=None if values.get("weak_label") is None else int(values["weak_label"]),
            frame_labels=values.get("frame_labels"),
            anomaly_class=values.get("anomaly_class"),
            stream_refs=values.get("stream_refs") or {},
        )


def validate_record(record: VideoRecord, labeled: bool = False, classes_declared: bool = False) -> VideoRecord:
    """
    Checks the record invariants and returns the record unchanged.

    Parameters
    ----------
    record : VideoRecord
        Record to check.
    labeled : bool
        Whether the record belongs to the weakly-labeled set.
    classes_declared : bool
        Whether the corpus declares anomaly classes.

    Returns
    -------
    VideoRecord
        The same record.
    """
    if record.n_frames < 1:
        raise LengthMismatch(f"{record.video_id}: n_frames must be positive, got {record.n_frames}.")
    if record.frame_labels is not None and len(record.frame_labels) != record.n_frames:
        raise LengthMismatch(
            f"{record.video_id}: {len(record.frame_labels)} frame labels for {record.n_frames} frames."
        )
    if labeled and record.weak_label is None:
        raise MissingLabel(f"{record.video_id}: labeled-set record has no weak label.")
    if record.weak_label is not None and record.weak_label not in (0, 1):
        raise MissingLabel(f"{record.video_id}: weak label must be 0 or 1, got {record.weak_label}.")
    if classes_declared and record.weak_label == 1 and not record.anomaly_class:
        raise MissingLabel(f"{record.video_id}: abnormal record has no anomaly class.")
    return record


@dataclass(frozen=True)
class SegmentBatch:
    """
    Pooled per-video feature matrices, one ``n_s x D`` matrix per stream.
    """
    streams: Dict[str, np.ndarray]
    n_s: int

    def __post_init__(self):
        for name, matrix in self.streams.items():
            if matrix.ndim != 2 or matrix.shape[0] != self.n_s:
                raise ShapeMismatch(f"Stream {name} has shape {matrix.shape}, expected ({self.n_s}, D).")
            if not np.all(np.isfinite(matrix)):
                raise NonFiniteData(f"Stream {name} contains non-finite values.")

    def stream(self, name: str) -> np.ndarray:
        """
        Matrix of one stream.
        """
        return self.streams[name]


@dataclass(frozen=True)
class HeadOutput:
    """
    Per-segment anomaly scores and the 32-wide penultimate representations.
    Both tensors may carry a leading batch dimension.
    """
    scores: torch.Tensor
    penultimate: torch.Tensor


@dataclass(frozen=True, eq=False)
class PseudoLabelSet:
    """
    Soft segment labels for every external video, produced by one head after a CDL step.

    Attributes
    ----------
    head_id : Heads
        Head the labels supervise.
    cdl_step : int
        Number of completed CDL steps when the labels were generated.
    labels : Dict[str, numpy.ndarray]
        Video id to ``n_s`` soft labels in [0, 1].
    source_heads : Tuple[Heads, ...]
        Heads whose predictions produced the labels.
    """
    head_id: Heads
    cdl_step: int
    labels: Dict[str, np.ndarray]
    source_heads: Tuple[Heads, ...] = ()

    def __post_init__(self):
        if self.cdl_step < 0:
            raise ValueError("cdl_step must be non-negative.")
        for video_id, values in self.labels.items():
            if np.any(values < 0.0) or np.any(values > 1.0):
                raise ValueError(f"Pseudo-labels for {video_id} leave [0, 1].")
        if not self.source_heads:
            object.__setattr__(self, "source_heads", (self.head_id,))

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class UncertaintyScores:
    """
    Per-segment uncertainty regularization scores, ``exp(tau * (cos - 1))``.
    """
    values: torch.Tensor
    tau: float

    def __post_init__(self):
        lower = math.exp(-2.0 * self.tau) * (1.0 - 1e-6)
        if torch.any(self.values < lower) or torch.any(self.values > 1.0 + 1e-6):
            raise ValueError("Uncertainty scores leave [exp(-2 tau), 1].")

    def mean_per_video(self) -> np.ndarray:
        """
        Mean score of every video in the batch.
        """
        values = self.values.detach()
        if values.ndim == 1:
            values = values.unsqueeze(0)
        return values.mean(dim=1).cpu().numpy().astype(np.float64)
