"""
Processor scoring a frame-labeled corpus with the main head of a checkpoint.
"""

import logging
import os
from typing import Dict, List

import numpy as np
import torch

from cross_domain_analyzer.data.corpus_manifest import CorpusManifest, load_manifest
from cross_domain_analyzer.data.feature_store import FeatureStore
from cross_domain_analyzer.errors import InvalidConfig, MissingFrameLabels, NoPositives, SingleClass
from cross_domain_analyzer.evaluation.metrics import FrameScores, average_precision, roc_auc, segment_to_frame
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models.checkpoint import load_checkpoint
from cross_domain_analyzer.models.head_network import PredictionHead
from cross_domain_analyzer.models.models_data import ModelsData
from cross_domain_analyzer.models.train_config import TrainConfig
from cross_domain_analyzer.processing_types import Heads
from cross_domain_analyzer.results.evaluation_results_processor import EvaluationResultsProcessor
from cross_domain_analyzer.results.models_results import ModelsResults
from cross_domain_analyzer.utilities import config_hash, file_digest

logger = logging.getLogger(__name__)


def score_frames(
        head: PredictionHead,
        manifest: CorpusManifest,
        feature_store: FeatureStore,
        config: TrainConfig
) -> List[FrameScores]:
    """
    Frame scores of every video in manifest order, from the main stream only.
    """
    frame_scores = []
    dtype = next(head.parameters()).dtype
    with torch.no_grad():
        for record in manifest.records:
            pooled = feature_store.load(record, config.main_stream, config.n_s)
            scores = head(torch.from_numpy(np.array(pooled)).to(dtype)).scores.double().numpy()
            frame_scores.append(segment_to_frame(scores, record.n_frames, record.video_id))
    return frame_scores


def evaluate_head(
        head: PredictionHead,
        manifest: CorpusManifest,
        feature_store: FeatureStore,
        config: TrainConfig
) -> Dict:
    """
    Corpus-level frame AUC and AP of a head, plus an AUC per anomaly class.

    The per-class AUC pools the frames of that class's videos with the frames of every
    normal video; classes whose subset lacks one of the two label values are skipped.

    Parameters
    ----------
    head : PredictionHead
        Main head.
    manifest : CorpusManifest
        Test corpus; every record needs frame labels.
    feature_store : FeatureStore
        Source of pooled main-stream features.
    config : TrainConfig
        Supplies n_s and the main stream name.

    Returns
    -------
    dict
        ``auc``, ``ap``, ``per_class_auc``, ``n_videos`` and ``n_frames``.
    """
    missing = [record.video_id for record in manifest.records if record.frame_labels is None]
    if not manifest.records or missing:
        raise MissingFrameLabels(f"Evaluation needs frame labels; missing for {missing[:5] or 'an empty corpus'}.")

    frame_scores = score_frames(head, manifest, feature_store, config)
    scores = np.concatenate([item.scores for item in frame_scores])
    labels = np.concatenate([np.asarray(record.frame_labels) for record in manifest.records])

    normal = [
        i for i, record in enumerate(manifest.records)
        if record.anomaly_class is None and not np.any(record.frame_labels)
    ]
    per_class = {}
    for name in sorted({r.anomaly_class for r in manifest.records if r.anomaly_class is not None}):
        chosen = normal + [i for i, r in enumerate(manifest.records) if r.anomaly_class == name]
        try:
            per_class[name] = roc_auc(
                np.concatenate([frame_scores[i].scores for i in chosen]),
                np.concatenate([manifest.records[i].frame_labels for i in chosen]),
            )
        except SingleClass:
            logger.warning("Skipping per-class AUC for %s: only one label value present.", name)

    try:
        ap = average_precision(scores, labels)
    except NoPositives:
        logger.warning("Test corpus has no anomalous frames; AP is undefined.")
        ap = None
    return {
        "auc": roc_auc(scores, labels),
        "ap": ap,
        "per_class_auc": per_class,
        "n_videos": len(manifest.records),
        "n_frames": int(len(labels)),
    }


class EvaluationProcessor:
    """
    Restores only the main head of a checkpoint and reports frame-level metrics.
    """
    def __init__(self, models_data: ModelsData, models_results: ModelsResults, feature_store: FeatureStore = None):
        self.data_models = models_data
        self.results_models = models_results
        self.feature_store = feature_store or FeatureStore(workers=models_data.workers)

    def process(self):
        """
        Evaluates the checkpoint and writes the metrics report.
        """
        try:
            checkpoint_path = self.data_models.checkpoint_path
            if not checkpoint_path:
                raise InvalidConfig("Evaluation needs a checkpoint.")
            if not self.data_models.test_manifest:
                raise InvalidConfig("Evaluation needs a test manifest.")

            state, config = load_checkpoint(checkpoint_path, heads=[Heads.MAIN])
            manifest = load_manifest(self.data_models.test_manifest)
            metrics = evaluate_head(state.heads[Heads.MAIN], manifest, self.feature_store, config)
            metrics.update({
                "config_hash": config_hash(config.to_dict()),
                "checkpoint": {
                    "file": os.path.basename(checkpoint_path),
                    "cdl_step": state.cdl_step,
                    "digest": file_digest(checkpoint_path),
                },
                "streams_read": sorted(self.feature_store.accessed),
            })
            self.results_models.metrics = metrics
            logger.info("Frame AUC %.4f, AP %s on %d videos.", metrics["auc"], metrics["ap"], metrics["n_videos"])

            results_processor = EvaluationResultsProcessor(self.data_models, self.results_models)
            results_processor.process()
        except Exception as e:
            logger.error("Evaluation failed: %s", e)
            raise
