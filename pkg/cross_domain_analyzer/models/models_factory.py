"""
Models factory for dispatching every command to its processor.
"""

import logging
import os

import cross_domain_analyzer.utilities as utilities
from cross_domain_analyzer.data.synthetic_corpus_generator import SyntheticCorpusGenerator
from cross_domain_analyzer.evaluation.diagnostics_processor import DiagnosticsProcessor
from cross_domain_analyzer.evaluation.evaluation_processor import EvaluationProcessor
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models.models_data import ModelsData
from cross_domain_analyzer.models.pseudo_label_processor import PseudoLabelProcessor
from cross_domain_analyzer.models.training_processor import TrainingProcessor
from cross_domain_analyzer.processing_types import Runs
from cross_domain_analyzer.results.models_results import ModelsResults

logger = logging.getLogger(__name__)


class ModelsFactory:
    """
    Factory class to handle processing based on the provided run type.
    """
    def __init__(self, models_data: ModelsData, models_results: ModelsResults):
        self.data_models = models_data
        self.results_models = models_results

    def run(self, run_type: Runs) -> str:
        """
        Echoes the resolved configuration into the output directory, then executes the
        method mapped to ``run_type``.
        """
        run_map = {
            Runs.SYNTH: self._run_synth,
            Runs.TRAIN: self._run_train,
            Runs.EVAL: self._run_eval,
            Runs.PSEUDO_LABEL: self._run_pseudo_label,
            Runs.DIAGNOSE: self._run_diagnose,
        }
        method = run_map[run_type]
        self.data_models.processing_type = run_type.value
        resolved_path = os.path.join(self.data_models.output_dir, utilities.RESOLVED_CONFIG_NAME)
        utilities.save_yaml(self.data_models.to_dict(), resolved_path)
        logger.info("Running %s; resolved configuration in %s.", run_type.value, resolved_path)
        return method()

    def _run_synth(self) -> str:
        generator = SyntheticCorpusGenerator(self.data_models.synth_spec)
        self.results_models.corpus_paths = generator.process(self.data_models.output_dir)
        digest = utilities.directory_digest(self.data_models.output_dir, exclude=(utilities.RESOLVED_CONFIG_NAME,))
        return f"Synthetic corpus written to {self.data_models.output_dir} (digest {digest})."

    def _run_train(self) -> str:
        TrainingProcessor(self.data_models, self.results_models).process()
        state = self.results_models.train_state
        return f"Training finished at CDL step {state.cdl_step}; checkpoints in {self.data_models.output_dir}."

    def _run_eval(self) -> str:
        EvaluationProcessor(self.data_models, self.results_models).process()
        metrics = self.results_models.metrics
        ap = "n/a" if metrics["ap"] is None else f"{metrics['ap']:.4f}"
        return f"Frame AUC {metrics['auc']:.4f}, AP {ap}."

    def _run_pseudo_label(self) -> str:
        PseudoLabelProcessor(self.data_models, self.results_models).process()
        return f"Pseudo-labels written to {self.data_models.output_dir}."

    def _run_diagnose(self) -> str:
        DiagnosticsProcessor(self.data_models, self.results_models).process()
        skipped = " (correlation skipped)" if self.results_models.correlation_series is None else ""
        return f"Diagnostics written to {self.data_models.output_dir}{skipped}."
