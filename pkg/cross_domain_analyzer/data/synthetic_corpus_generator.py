"""
Module for generating two-domain synthetic corpora with planted anomalies.
"""

import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Mapping, Tuple

import numpy as np
import yaml

from cross_domain_analyzer.data.corpus_manifest import CorpusManifest, save_manifest
from cross_domain_analyzer.data.feature_store import write_blob
from cross_domain_analyzer.data.video_data import VideoRecord
from cross_domain_analyzer.errors import InvalidSpec
from cross_domain_analyzer.logger import logger

logger = logging.getLogger(__name__)

MAIN_STREAM = "main"
AUX_STREAM = "aux"
SOURCE_DOMAIN = "source"
TARGET_DOMAIN = "target"


@dataclass(frozen=True)
class SynthSpec:
    """
    Parameters of a synthetic two-domain corpus.

    The source domain feeds the weakly-labeled set and a source test set, the target
    domain feeds the external set and a target test set. Target videos may contain
    anomaly classes that never occur in the source domain.
    """
    n_labeled: int = 200
    n_external: int = 200
    n_test_source: int = 50
    n_test_target: int = 100
    frames_range: Tuple[int, int] = (96, 320)
    class_windows: Dict[str, Tuple[int, int]] = field(default_factory=lambda: {
        "fighting": (24, 64),
        "explosion": (16, 48),
        "theft": (32, 96),
        "accident": (16, 40),
    })
    source_classes: List[str] = field(default_factory=lambda: ["fighting", "explosion"])
    target_classes: List[str] = field(default_factory=lambda: ["fighting", "explosion", "theft", "accident"])
    dim_main: int = 32
    dim_aux: int = 16
    clip_length: int = 16
    domain_shift: float = 1.0
    anomaly_magnitude: float = 3.0
    rho: float = 0.7
    noise_scale: float = 1.0
    abnormal_fraction: float = 0.5
    fps: float = 30.0
    seed: int = 0

    def __post_init__(self):
        if min(self.n_labeled, self.n_external, self.n_test_source, self.n_test_target) < 0:
            raise InvalidSpec("Video counts must be non-negative.")
        low, high = self.frames_range
        if low < 1 or high < low:
            raise InvalidSpec(f"Invalid frames range {self.frames_range}.")
        if self.domain_shift < 0 or self.anomaly_magnitude < 0 or self.noise_scale < 0:
            raise InvalidSpec("Magnitudes must be non-negative.")
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidSpec(f"rho must lie in [0, 1], got {self.rho}.")
        if not 0.0 <= self.abnormal_fraction <= 1.0:
            raise InvalidSpec("abnormal_fraction must lie in [0, 1].")
        if self.dim_main < 1 or self.dim_aux < 1 or self.clip_length < 1:
            raise InvalidSpec("Dimensions and clip length must be positive.")
        for name in list(self.source_classes) + list(self.target_classes):
            if name not in self.class_windows:
                raise InvalidSpec(f"Class {name} has no window length range.")
        for name, (w_low, w_high) in self.class_windows.items():
            if w_low < 1 or w_high < w_low:
                raise InvalidSpec(f"Invalid window range for class {name}.")

    @classmethod
    def from_dict(cls, values: Mapping) -> "SynthSpec":
        """
        Builds a spec from a mapping; unknown keys are rejected.
        """
        known = {item.name for item in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise InvalidSpec(f"Unknown synthetic spec keys: {sorted(unknown)}.")
        values = dict(values)
        if "frames_range" in values:
            values["frames_range"] = tuple(values["frames_range"])
        if "class_windows" in values:
            values["class_windows"] = {name: tuple(span) for name, span in values["class_windows"].items()}
        return cls(**values)

    def to_dict(self) -> dict:
        values = asdict(self)
        values["frames_range"] = list(self.frames_range)
        values["class_windows"] = {name: list(span) for name, span in self.class_windows.items()}
        return values


class SyntheticCorpusGenerator:
    """
    Writes manifests, feature blobs and frame labels of a synthetic corpus.

    Splits written under the output directory: ``labeled`` (source domain, weak labels
    only), ``external`` (target domain, no weak labels, frame labels kept for
    diagnostics), ``test_source`` and ``test_target`` (weak and frame labels).
    """
    SPLITS = ("labeled", "external", "test_source", "test_target")

    def __init__(self, spec: SynthSpec):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        all_classes = sorted(spec.class_windows)
        self.class_directions = {
            name: self._unit_vector(spec.dim_main) for name in all_classes
        }
        self.domain_means = {
            SOURCE_DOMAIN: np.zeros(spec.dim_main),
            TARGET_DOMAIN: spec.domain_shift * self._unit_vector(spec.dim_main),
        }
        self.stream_map = self.rng.normal(0.0, 1.0 / np.sqrt(spec.dim_main), size=(spec.dim_main, spec.dim_aux))

    def _unit_vector(self, dim: int) -> np.ndarray:
        vector = self.rng.normal(size=dim)
        return vector / np.linalg.norm(vector)

    def process(self, out_dir: str) -> Dict[str, str]:
        """
        Generates every split and returns split name to manifest path.
        """
        try:
            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, "synth_spec.yaml"), "w", encoding="utf-8") as handle:
                yaml.safe_dump(self.spec.to_dict(), handle, sort_keys=True)

            plan = {
                "labeled": (SOURCE_DOMAIN, self.spec.n_labeled, self.spec.source_classes, True, False),
                "external": (TARGET_DOMAIN, self.spec.n_external, self.spec.target_classes, False, True),
                "test_source": (SOURCE_DOMAIN, self.spec.n_test_source, self.spec.source_classes, True, True),
                "test_target": (TARGET_DOMAIN, self.spec.n_test_target, self.spec.target_classes, True, True),
            }
            manifests = {}
            for split in self.SPLITS:
                domain, count, classes, weak, frames = plan[split]
                manifests[split] = self.generate_split(
                    out_dir=out_dir, split=split, domain=domain, count=count,
                    classes=classes, keep_weak_labels=weak, keep_frame_labels=frames
                )
            return manifests
        except Exception as e:
            logger.error("Error occurred during corpus generation: %s", e)
            raise

    def generate_split(
            self,
            out_dir: str,
            split: str,
            domain: str,
            count: int,
            classes: List[str],
            keep_weak_labels: bool,
            keep_frame_labels: bool
    ) -> str:
        """
        Generates one split and writes its manifest.

        Returns
        -------
        str
            Path of the written manifest.
        """
        split_dir = os.path.join(os.path.abspath(out_dir), split)
        n_abnormal = int(round(count * self.spec.abnormal_fraction)) if classes else 0
        is_abnormal = np.zeros(count, dtype=bool)
        is_abnormal[:n_abnormal] = True
        self.rng.shuffle(is_abnormal)

        records = []
        for index in range(count):
            video_id = f"{split}_{index:04d}"
            anomaly_class = str(classes[index % len(classes)]) if is_abnormal[index] else None
            main, aux, frame_labels = self.generate_video(domain=domain, anomaly_class=anomaly_class)

            refs = {
                MAIN_STREAM: os.path.join(split_dir, "blobs", f"{video_id}_{MAIN_STREAM}.cdlf"),
                AUX_STREAM: os.path.join(split_dir, "blobs", f"{video_id}_{AUX_STREAM}.cdlf"),
            }
            write_blob(main, refs[MAIN_STREAM])
            write_blob(aux, refs[AUX_STREAM])

            weak_label = int(frame_labels.any())
            records.append(VideoRecord(
                video_id=video_id,
                domain=domain,
                n_frames=len(frame_labels),
                weak_label=weak_label if keep_weak_labels else None,
                frame_labels=frame_labels if keep_frame_labels else None,
                anomaly_class=anomaly_class,
                stream_refs=refs,
            ))

        manifest = CorpusManifest(
            records=records,
            streams={MAIN_STREAM: self.spec.dim_main, AUX_STREAM: self.spec.dim_aux},
            fps=self.spec.fps,
            labeled=keep_weak_labels and split == "labeled",
            classes=sorted(set(classes)),
            root=split_dir,
        )
        path = os.path.join(split_dir, "manifest.yaml")
        save_manifest(manifest, path)
        logger.info("Generated %s split: %d videos (%d abnormal).", split, count, n_abnormal)
        return path

    def generate_video(self, domain: str, anomaly_class: str = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Draws the frame-level main stream, the clip-level auxiliary stream and the frame labels of one video.
        """
        spec = self.spec
        n_frames = int(self.rng.integers(spec.frames_range[0], spec.frames_range[1] + 1))
        frame_labels = np.zeros(n_frames, dtype=np.uint8)

        main = self.domain_means[domain] + spec.noise_scale * self.rng.normal(size=(n_frames, spec.dim_main))
        if anomaly_class is not None:
            w_low, w_high = spec.class_windows[anomaly_class]
            length = int(min(n_frames, self.rng.integers(w_low, w_high + 1)))
            start = int(self.rng.integers(0, n_frames - length + 1))
            frame_labels[start:start + length] = 1
            main[start:start + length] += spec.anomaly_magnitude * self.class_directions[anomaly_class]

        independent = spec.noise_scale * self.rng.normal(size=(n_frames, spec.dim_aux))
        aux_frames = spec.rho * (main @ self.stream_map) + np.sqrt(1.0 - spec.rho ** 2) * independent
        n_clips = int(np.ceil(n_frames / spec.clip_length))
        aux = np.stack([
            aux_frames[i * spec.clip_length:(i + 1) * spec.clip_length].mean(axis=0) for i in range(n_clips)
        ])
        return main.astype(np.float32), aux.astype(np.float32), frame_labels


def generate(spec: SynthSpec, out_dir: str) -> Dict[str, str]:
    """
    Generates a synthetic corpus directory, see ``SyntheticCorpusGenerator``.
    """
    return SyntheticCorpusGenerator(spec).process(out_dir)
