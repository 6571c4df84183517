"""
Processor replaying the checkpoints of a training run to produce uncertainty diagnostics.
"""

import logging
import os

import pandas as pd

from cross_domain_analyzer.data.corpus_manifest import load_manifest
from cross_domain_analyzer.data.feature_store import FeatureStore
from cross_domain_analyzer.errors import InvalidConfig, MissingLogs
from cross_domain_analyzer.evaluation.diagnostics import (
    confident_mass, default_bin_edges, per_video_mean_uncertainty, segment_diagnostics,
    uncertainty_cdf, uncertainty_error_correlation
)
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models.cdl_trainer import CDLTrainer
from cross_domain_analyzer.models.checkpoint import list_checkpoints, load_checkpoint
from cross_domain_analyzer.models.models_data import ModelsData, load_models_data
from cross_domain_analyzer.models.training_processor import load_corpora
from cross_domain_analyzer.results.diagnostics_results_processor import DiagnosticsResultsProcessor
from cross_domain_analyzer.results.models_results import ModelsResults
from cross_domain_analyzer.results.training_log import TRAIN_LOG_NAME, read_training_log
from cross_domain_analyzer.utilities import RESOLVED_CONFIG_NAME

logger = logging.getLogger(__name__)


class DiagnosticsProcessor:
    """
    For every checkpoint of a run: the CDF of per-video mean uncertainty on the external
    corpus and, when the external corpus carries frame labels, the correlation between
    segment uncertainty and the main head's error.
    """
    def __init__(self, models_data: ModelsData, models_results: ModelsResults, n_bins: int = 20):
        self.data_models = models_data
        self.results_models = models_results
        self.bin_edges = default_bin_edges(n_bins)

    def _external_corpus(self, run_dir: str):
        models_data = self.data_models
        if not (models_data.external_manifest or models_data.corpus_manifest):
            resolved = os.path.join(run_dir, RESOLVED_CONFIG_NAME)
            if not os.path.exists(resolved):
                raise MissingLogs(f"{resolved} does not exist and no external manifest was configured.")
            models_data = load_models_data(config_path=resolved)
        if models_data.external_manifest:
            return load_manifest(models_data.external_manifest)
        if models_data.corpus_manifest and models_data.open_set_classes is not None:
            return load_corpora(models_data)[1]
        raise InvalidConfig("The run configuration names no external corpus.")

    def process(self):
        """
        Method for computing and saving the diagnostic bundle.
        """
        try:
            run_dir = self.data_models.run_dir
            checkpoints = list_checkpoints(run_dir)
            if not checkpoints:
                raise MissingLogs(f"{run_dir} holds no checkpoints.")
            events = list(read_training_log(os.path.join(run_dir, TRAIN_LOG_NAME)))

            external = self._external_corpus(run_dir)
            with_truth = external.has_frame_labels
            if not with_truth:
                logger.warning("External corpus has no frame labels; skipping the uncertainty/error correlation.")

            feature_store = FeatureStore(workers=self.data_models.workers)
            cdf_rows, summary_rows, correlation_rows = [], [], []
            for cdl_step, path in checkpoints:
                state, config = load_checkpoint(path)
                replayed = CDLTrainer(config).restrict_external(external)
                diagnostics = segment_diagnostics(state.heads, replayed, feature_store, config)
                mean_s = per_video_mean_uncertainty(diagnostics)
                cdf_rows.append(uncertainty_cdf(mean_s, self.bin_edges))
                summary_rows.append({
                    "cdl_step": cdl_step,
                    "mean_uncertainty": float(mean_s.mean()),
                    "confident_mass": confident_mass(mean_s),
                })
                if with_truth and cdl_step >= 1:
                    result = uncertainty_error_correlation(state.heads, replayed, feature_store, config, diagnostics)
                    correlation_rows.append({
                        "cdl_step": cdl_step,
                        "rho": result.rho,
                        "p_value": result.p_value,
                        "n_segments": result.n_segments,
                    })

            steps = [cdl_step for cdl_step, _ in checkpoints]
            self.results_models.uncertainty_cdf = pd.DataFrame(
                cdf_rows,
                index=pd.Index(steps, name="cdl_step"),
                columns=[f"{edge:.2f}" for edge in self.bin_edges],
            )
            self.results_models.uncertainty_summary = pd.DataFrame(summary_rows)
            self.results_models.correlation_series = (
                pd.DataFrame(correlation_rows, columns=["cdl_step", "rho", "p_value", "n_segments"])
                if with_truth else None
            )

            results_processor = DiagnosticsResultsProcessor(self.data_models, self.results_models, events)
            results_processor.process()
        except Exception as e:
            logger.error("Diagnostics failed: %s", e)
            raise
