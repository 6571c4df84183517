"""
Processor exporting the soft segment labels both heads of a checkpoint assign to an external corpus.
"""

import logging
import os

import numpy as np
import pandas as pd

import cross_domain_analyzer.utilities as utilities
from cross_domain_analyzer.data.corpus_manifest import load_manifest
from cross_domain_analyzer.data.feature_store import FeatureStore
from cross_domain_analyzer.errors import InvalidConfig
from cross_domain_analyzer.evaluation.diagnostics import segment_diagnostics
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models.cdl_trainer import CDLTrainer
from cross_domain_analyzer.models.checkpoint import load_checkpoint
from cross_domain_analyzer.models.models_data import ModelsData
from cross_domain_analyzer.processing_types import Heads
from cross_domain_analyzer.results.models_results import ModelsResults
from cross_domain_analyzer.results.training_log import TrainingLog

logger = logging.getLogger(__name__)

SUMMARY_NAME = "pseudo_labels_summary.csv"


def pseudo_label_file_name(head: Heads, cdl_step: int) -> str:
    return f"pseudo_labels_{head.value}_step{cdl_step:03d}.npz"


class PseudoLabelProcessor:
    """
    Loads both heads of a checkpoint, labels every external video and writes one archive
    per head plus a per-video summary table.
    """
    def __init__(self, models_data: ModelsData, models_results: ModelsResults):
        self.data_models = models_data
        self.results_models = models_results

    def process(self):
        """
        Method for generating and saving pseudo-labels.
        """
        try:
            if not self.data_models.checkpoint_path:
                raise InvalidConfig("Pseudo-labeling needs a checkpoint.")
            if not self.data_models.external_manifest:
                raise InvalidConfig("Pseudo-labeling needs an external manifest.")

            state, config = load_checkpoint(self.data_models.checkpoint_path)
            external = load_manifest(self.data_models.external_manifest)
            feature_store = FeatureStore(workers=self.data_models.workers)
            trainer = CDLTrainer(config, feature_store=feature_store, training_log=TrainingLog())
            pseudo_labels = trainer.generate_pseudo_labels(state, external)
            diagnostics = segment_diagnostics(state.heads, external, feature_store, config)
            self.results_models.pseudo_labels = pseudo_labels

            output_dir = self.data_models.output_dir
            os.makedirs(output_dir, exist_ok=True)
            written = []
            for head, label_set in pseudo_labels.items():
                path = os.path.join(output_dir, pseudo_label_file_name(head, label_set.cdl_step))
                video_ids = list(label_set.labels)
                np.savez(
                    path,
                    video_ids=np.array(video_ids),
                    labels=np.stack([label_set.labels[video_id] for video_id in video_ids]),
                    source_heads=np.array([source.value for source in label_set.source_heads]),
                    cdl_step=np.array(label_set.cdl_step),
                )
                written.append(path)

            rows = []
            for record in external.records:
                row = {"video_id": record.video_id}
                for head, label_set in pseudo_labels.items():
                    labels = label_set.labels[record.video_id]
                    row[f"{head.value}_mean"] = float(np.mean(labels))
                    row[f"{head.value}_max"] = float(np.max(labels))
                    row[f"{head.value}_above_half"] = float(np.mean(labels > 0.5))
                row["mean_uncertainty"] = float(np.mean(diagnostics[record.video_id].uncertainty))
                rows.append(row)
            written.append(utilities.save_csv(pd.DataFrame(rows), os.path.join(output_dir, SUMMARY_NAME)))
            self.results_models.written_files = written
            logger.info("Wrote pseudo-labels of %d videos for CDL step %d.", len(external), state.cdl_step)
        except Exception as e:
            logger.error("Pseudo-labeling failed: %s", e)
            raise
