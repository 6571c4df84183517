"""
Processor running step 0 followed by the CDL steps.
"""

import logging
import os
from typing import Optional, Tuple

from cross_domain_analyzer.data.corpus_manifest import CorpusManifest, load_manifest
from cross_domain_analyzer.data.feature_store import FeatureStore
from cross_domain_analyzer.errors import InvalidConfig
from cross_domain_analyzer.evaluation.open_set import open_set_split
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models.cdl_trainer import CDLTrainer
from cross_domain_analyzer.models.checkpoint import load_checkpoint
from cross_domain_analyzer.models.models_data import ModelsData
from cross_domain_analyzer.results.models_results import ModelsResults
from cross_domain_analyzer.results.training_log import TRAIN_LOG_NAME, TrainingLog, rewind_training_log

logger = logging.getLogger(__name__)

RESUMABLE_DIFFERENCES = {"cdl_steps"}


def load_corpora(models_data: ModelsData, require_external: bool = True) -> Tuple[CorpusManifest, Optional[CorpusManifest]]:
    """
    Loads the labeled and external corpora named by the run configuration.

    Explicit manifests win; otherwise an open-set run splits ``corpus_manifest`` by class
    with the configured seed.

    Returns
    -------
    tuple
        ``(labeled, external)``; external is None when not configured and not required.
    """
    if models_data.labeled_manifest:
        labeled = load_manifest(models_data.labeled_manifest)
        external = load_manifest(models_data.external_manifest) if models_data.external_manifest else None
    elif models_data.corpus_manifest and models_data.open_set_classes is not None:
        labeled, external = open_set_split(
            load_manifest(models_data.corpus_manifest),
            models_data.open_set_classes,
            models_data.train_config.seed,
        )
    else:
        raise InvalidConfig("Configure paths.labeled_manifest, or paths.corpus_manifest with open_set_classes.")
    if external is None and require_external:
        raise InvalidConfig("CDL steps need paths.external_manifest.")
    return labeled, external


class TrainingProcessor:
    """
    Trains both heads and leaves checkpoints plus the structured log in the output directory.
    """
    def __init__(self, models_data: ModelsData, models_results: ModelsResults):
        """
        Parameters
        ----------
        models_data : ModelsData
            Resolved run configuration.
        models_results : ModelsResults
            Receives the final training state.
        """
        self.data_models = models_data
        self.results_models = models_results

    def process(self):
        """
        Runs step 0 (or restores the resume checkpoint) and then the CDL steps.
        """
        try:
            config = self.data_models.train_config
            output_dir = self.data_models.output_dir
            os.makedirs(output_dir, exist_ok=True)

            labeled, external = load_corpora(self.data_models, require_external=config.cdl_steps > 0)
            if config.cdl_steps > 0:
                self._check_external(CDLTrainer(config).restrict_external(external), config.batch_size)
            feature_store = FeatureStore(workers=self.data_models.workers)
            if self.data_models.workers > 1:
                feature_store.load_corpus(labeled, [config.main_stream, config.aux_stream], config.n_s)
                if external is not None:
                    feature_store.load_corpus(external, [config.main_stream, config.aux_stream], config.n_s)

            log_path = os.path.join(output_dir, TRAIN_LOG_NAME)
            if self.data_models.resume_path:
                state, stored = load_checkpoint(self.data_models.resume_path)
                self._check_resumable(stored.to_dict(), config.to_dict())
                training_log = rewind_training_log(log_path, state.cdl_step)
            else:
                state = None
                training_log = TrainingLog(log_path, truncate=True)

            trainer = CDLTrainer(
                config,
                feature_store=feature_store,
                training_log=training_log,
                checkpoint_dir=output_dir,
            )
            if state is None:
                state = trainer.train_step0(labeled)
            if config.cdl_steps > 0:
                state = trainer.train_cdl(state, labeled, external)
            self.results_models.train_state = state
            logger.info("Training finished at CDL step %d after %d optimizer steps.", state.cdl_step, state.global_step)
        except Exception as e:
            logger.error("Training failed: %s", e)
            raise

    def _check_external(self, external: CorpusManifest, batch_size: int):
        needed = batch_size // 2
        if len(external) >= needed:
            return
        reason = f"CDL steps need {needed} external videos per batch, the external corpus has {len(external)}."
        if self.data_models.open_set_classes is not None and not external.classes:
            reason += f" open_set_classes={self.data_models.open_set_classes} labels every anomaly class."
        raise InvalidConfig(reason)

    @staticmethod
    def _check_resumable(stored: dict, requested: dict):
        changed = sorted(
            key for key in stored
            if key not in RESUMABLE_DIFFERENCES and stored[key] != requested.get(key)
        )
        if changed:
            raise InvalidConfig(f"Resume checkpoint was trained with different settings: {changed}.")
