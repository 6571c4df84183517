"""
Module orchestrating CDL step 0 and the iterative CDL steps.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch

from cross_domain_analyzer.data.corpus_manifest import CorpusManifest
from cross_domain_analyzer.data.feature_store import FeatureStore
from cross_domain_analyzer.data.video_data import PseudoLabelSet
from cross_domain_analyzer.errors import DegenerateCorpus, InsufficientVideos, InvalidConfig, MissingFeatures
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models import losses
from cross_domain_analyzer.models.adam import AdamMoments, adam_update
from cross_domain_analyzer.models.checkpoint import checkpoint_name, save_checkpoint
from cross_domain_analyzer.models.head_network import PredictionHead, gradient
from cross_domain_analyzer.models.train_config import TrainConfig
from cross_domain_analyzer.processing_types import Heads, PseudoLabelModes
from cross_domain_analyzer.results.training_log import TrainingLog

logger = logging.getLogger(__name__)


@dataclass
class TrainState:
    """
    Everything needed to continue training.

    Attributes
    ----------
    heads : dict
        ``Heads.MAIN`` and ``Heads.AUX`` prediction heads.
    moments : dict
        Adam state per head.
    pseudo_labels : dict
        Current pseudo-label set per head; empty before CDL step 1.
    cdl_step : int
        Latest CDL step started; equals the completed steps at every checkpoint.
    epoch_in_step : int
        Epochs finished inside ``cdl_step``.
    global_step : int
        Optimizer steps taken so far.
    rng : numpy.random.Generator
        Source of every sampling decision.
    """
    heads: Dict[Heads, PredictionHead]
    moments: Dict[Heads, AdamMoments]
    pseudo_labels: Dict[Heads, PseudoLabelSet] = field(default_factory=dict)
    cdl_step: int = 0
    epoch_in_step: int = 0
    global_step: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)


@dataclass(frozen=True)
class MiniBatch:
    """
    Video ids of one optimization step: (abnormal, normal) pairs plus external videos.
    """
    pairs: List[Tuple[str, str]]
    external: List[str] = field(default_factory=list)


def _shuffled_pairs(labeled: CorpusManifest, rng: np.random.Generator) -> List[Tuple[str, str]]:
    abnormal = [record.video_id for record in labeled.abnormal]
    normal = [record.video_id for record in labeled.normal]
    abnormal = [abnormal[i] for i in rng.permutation(len(abnormal))]
    normal = [normal[i] for i in rng.permutation(len(normal))]
    return list(zip(abnormal, normal))


def compose_epoch(
        labeled: CorpusManifest,
        external: CorpusManifest,
        batch_size: int,
        rng: np.random.Generator
) -> List[MiniBatch]:
    """
    Splits one epoch into mini-batches of ``batch_size / 4`` (abnormal, normal) pairs and
    ``batch_size / 2`` external videos, sampling without replacement. Videos left over
    once either pool is exhausted sit the epoch out.

    Parameters
    ----------
    labeled : CorpusManifest
        Weakly-labeled corpus.
    external : CorpusManifest
        Unlabeled corpus.
    batch_size : int
        Videos per batch, divisible by 4.
    rng : numpy.random.Generator
        Sampling source.

    Returns
    -------
    list of MiniBatch
        Full batches of the epoch.
    """
    if batch_size <= 0 or batch_size % 4 != 0:
        raise InsufficientVideos(f"Batch size {batch_size} is not a positive multiple of 4.")
    n_pairs, n_external = batch_size // 4, batch_size // 2
    if len(labeled.abnormal) < n_pairs or len(labeled.normal) < n_pairs:
        raise InsufficientVideos(
            f"Need {n_pairs} abnormal and normal videos, have {len(labeled.abnormal)} and {len(labeled.normal)}."
        )
    if len(external) < n_external:
        raise InsufficientVideos(f"Need {n_external} external videos, have {len(external)}.")

    pairs = _shuffled_pairs(labeled, rng)
    external_ids = [external.records[i].video_id for i in rng.permutation(len(external))]
    n_batches = min(len(pairs) // n_pairs, len(external_ids) // n_external)
    return [
        MiniBatch(
            pairs=pairs[b * n_pairs:(b + 1) * n_pairs],
            external=external_ids[b * n_external:(b + 1) * n_external],
        )
        for b in range(n_batches)
    ]


def compose_batch(
        labeled: CorpusManifest,
        external: CorpusManifest,
        batch_size: int,
        rng: np.random.Generator
) -> MiniBatch:
    """
    First mini-batch of a freshly shuffled epoch.
    """
    return compose_epoch(labeled, external, batch_size, rng)[0]


class CDLTrainer:
    """
    Trains the main and auxiliary heads: labeled-only step 0, then CDL steps of
    uncertainty-reweighted training on the union of labeled and external data with
    pseudo-label regeneration at every step boundary.

    Attributes
    ----------
    config : TrainConfig
        Hyper-parameters.
    feature_store : FeatureStore
        Source of pooled features.
    training_log : TrainingLog
        Receives one record per optimizer step and schedule event.
    checkpoint_dir : str or None
        Where checkpoints are written; nothing is written when None.
    """
    def __init__(
            self,
            config: TrainConfig,
            feature_store: Optional[FeatureStore] = None,
            training_log: Optional[TrainingLog] = None,
            checkpoint_dir: Optional[str] = None,
            dtype: torch.dtype = torch.float32
    ):
        self.config = config
        self.feature_store = feature_store or FeatureStore()
        self.training_log = training_log or TrainingLog()
        self.checkpoint_dir = checkpoint_dir
        self.dtype = dtype
        self._tensors: Dict[Tuple[str, str, str], torch.Tensor] = {}

    def stream_of(self, head: Heads) -> str:
        return self.config.main_stream if head is Heads.MAIN else self.config.aux_stream

    def _features(self, manifest: CorpusManifest, video_ids: List[str], head: Heads) -> torch.Tensor:
        stream = self.stream_of(head)
        stacked = []
        for video_id in video_ids:
            key = (manifest.root, video_id, stream)
            tensor = self._tensors.get(key)
            if tensor is None:
                try:
                    record = manifest.record(video_id)
                except KeyError as e:
                    raise MissingFeatures(f"{video_id} is not part of the corpus.") from e
                pooled = self.feature_store.load(record, stream, self.config.n_s)
                tensor = torch.from_numpy(np.array(pooled)).to(self.dtype)
                self._tensors[key] = tensor
            stacked.append(tensor)
        return torch.stack(stacked)

    def _learning_rates(self, head: PredictionHead) -> Dict[str, float]:
        return {
            name: self.config.lr_encoder if name.startswith("encoder.") else self.config.lr_fc
            for name, _ in head.named_parameters()
        }

    def _apply_update(self, state: TrainState, head: Heads, grads: Dict[str, torch.Tensor]):
        module = state.heads[head]
        params = dict(module.named_parameters())
        new_params, state.moments[head] = adam_update(
            params=params,
            grads=grads,
            moments=state.moments[head],
            lr=self._learning_rates(module),
            weight_decay=self.config.weight_decay,
        )
        with torch.no_grad():
            for name, parameter in params.items():
                parameter.copy_(new_params[name])

    def _log_step(self, state: TrainState, phase: str, epoch: int, breakdowns: Dict[Heads, losses.LossBreakdown],
                  mean_s: Optional[float] = None):
        state.global_step += 1
        self.training_log.write(
            "step",
            phase=phase,
            cdl_step=state.cdl_step,
            epoch=epoch,
            global_step=state.global_step,
            losses={head.value: breakdown.to_dict() for head, breakdown in breakdowns.items()},
            mean_s=mean_s,
            lr={"encoder": self.config.lr_encoder, "fc": self.config.lr_fc},
        )

    def initial_state(self, labeled: CorpusManifest) -> TrainState:
        """
        Freshly initialized heads seeded from the configuration.
        """
        cfg = self.config
        for stream in (cfg.main_stream, cfg.aux_stream):
            if stream not in labeled.streams:
                raise MissingFeatures(f"Labeled corpus does not declare stream {stream}.")
        heads = {
            Heads.MAIN: PredictionHead(labeled.streams[cfg.main_stream], seed=cfg.seed).to(self.dtype),
            Heads.AUX: PredictionHead(labeled.streams[cfg.aux_stream], seed=cfg.seed + 1).to(self.dtype),
        }
        return TrainState(
            heads=heads,
            moments={head: AdamMoments() for head in heads},
            rng=np.random.default_rng(cfg.seed),
        )

    def train_step0(self, labeled: CorpusManifest, state: Optional[TrainState] = None) -> TrainState:
        """
        Trains both heads separately on the labeled corpus with the ranking loss only.

        Each epoch pairs shuffled abnormal and normal videos without replacement and
        feeds ``batch_size / 2`` pairs per optimizer step, the last batch possibly smaller.

        Parameters
        ----------
        labeled : CorpusManifest
            Weakly-labeled corpus with at least one abnormal and one normal video.
        state : TrainState, optional
            Starting state; freshly initialized when omitted.

        Returns
        -------
        TrainState
            State after ``epochs_step0`` epochs, ``cdl_step`` 0.
        """
        if not labeled.abnormal or not labeled.normal:
            raise DegenerateCorpus(
                f"Labeled corpus has {len(labeled.abnormal)} abnormal and {len(labeled.normal)} normal videos."
            )
        cfg = self.config
        state = state or self.initial_state(labeled)
        pairs_per_batch = max(1, cfg.batch_size // 2)

        logger.info("CDL step 0: %d epochs on %d labeled videos.", cfg.epochs_step0, len(labeled))
        for epoch in range(cfg.epochs_step0):
            pairs = _shuffled_pairs(labeled, state.rng)
            for start in range(0, len(pairs), pairs_per_batch):
                self._step0_update(state, labeled, pairs[start:start + pairs_per_batch], epoch)
            self.training_log.write("epoch", phase="step0", cdl_step=0, epoch=epoch)
        state.epoch_in_step = cfg.epochs_step0
        if self.checkpoint_dir:
            self._checkpoint(state)
        return state

    def _step0_update(self, state: TrainState, labeled: CorpusManifest, pairs: List[Tuple[str, str]], epoch: int):
        cfg = self.config
        abnormal_ids = [pair[0] for pair in pairs]
        normal_ids = [pair[1] for pair in pairs]
        breakdowns = {}
        for head in (Heads.MAIN, Heads.AUX):
            module = state.heads[head]
            abnormal = self._features(labeled, abnormal_ids, head)
            normal = self._features(labeled, normal_ids, head)
            terms = {}

            def closure():
                terms.update(losses.ranking_loss(
                    module(abnormal).scores, module(normal).scores, cfg.lambda1, cfg.lambda2
                ))
                return terms["rank"]

            grads = gradient(module, closure)
            self._apply_update(state, head, grads)
            rank = terms["rank"].item()
            breakdowns[head] = losses.LossBreakdown(
                rank=rank,
                hinge=terms["hinge"].item(),
                temporal_smoothness=terms["temporal_smoothness"].item(),
                sparsity=terms["sparsity"].item(),
                total=float(losses.total_loss(rank, 0.0, cfg.lambda4)),
            )
        self._log_step(state, "step0", epoch, breakdowns)

    def predict(self, module: PredictionHead, features: torch.Tensor) -> np.ndarray:
        """
        Scores of one ``n_s x D`` matrix without recording gradients.
        """
        with torch.no_grad():
            return module(features).scores.numpy().copy()

    def generate_pseudo_labels(self, state: TrainState, external: CorpusManifest) -> Dict[Heads, PseudoLabelSet]:
        """
        Soft segment labels of every external video from the current heads, assigned to
        heads according to the configured pseudo-label mode and stamped with the
        number of completed CDL steps.

        Returns
        -------
        dict
            One ``PseudoLabelSet`` per head.
        """
        if not state.heads:
            raise MissingFeatures("No trained heads in the state.")
        predictions = {head: {} for head in (Heads.MAIN, Heads.AUX)}
        for record in external.records:
            for head in predictions:
                features = self._features(external, [record.video_id], head)[0]
                predictions[head][record.video_id] = self.predict(state.heads[head], features)

        stamp = state.cdl_step
        mode = PseudoLabelModes(self.config.pseudo_label_mode)
        pseudo_labels = {}
        for head in (Heads.MAIN, Heads.AUX):
            if mode is PseudoLabelModes.SELF:
                sources, labels = (head,), predictions[head]
            elif mode is PseudoLabelModes.CROSS:
                sources, labels = (head.other,), predictions[head.other]
            else:
                sources = (Heads.MAIN, Heads.AUX)
                labels = {
                    video_id: (predictions[Heads.MAIN][video_id] + predictions[Heads.AUX][video_id]) / 2.0
                    for video_id in predictions[Heads.MAIN]
                }
            pseudo_labels[head] = PseudoLabelSet(head_id=head, cdl_step=stamp, labels=labels, source_heads=sources)

        self.training_log.write(
            "pseudo_labels",
            cdl_step=stamp,
            n_videos=len(external),
            mode=mode.value,
        )
        return pseudo_labels

    def restrict_external(self, external: CorpusManifest) -> CorpusManifest:
        """
        Seeded subset of the external corpus when ``max_external_videos`` is set.
        """
        cap = self.config.max_external_videos
        if cap is None or cap >= len(external):
            return external
        chosen = np.sort(np.random.default_rng(self.config.seed).choice(len(external), size=cap, replace=False))
        logger.info("Using %d of %d external videos.", cap, len(external))
        return external.with_records([external.records[i] for i in chosen])

    def train_cdl(self, state: TrainState, labeled: CorpusManifest, external: CorpusManifest) -> TrainState:
        """
        Runs the CDL steps after ``state.cdl_step`` up to ``cdl_steps``.

        Every step trains ``epochs_per_step`` epochs on composed batches minimizing the
        total objective, recomputing the uncertainty scores from the current penultimate
        representations for every batch, then regenerates both pseudo-label sets and
        writes a checkpoint.

        Parameters
        ----------
        state : TrainState
            State after step 0 or after a completed CDL step.
        labeled : CorpusManifest
            Weakly-labeled corpus.
        external : CorpusManifest
            Unlabeled corpus.

        Returns
        -------
        TrainState
            State after the final CDL step.
        """
        cfg = self.config
        if state.cdl_step > cfg.cdl_steps:
            raise InvalidConfig(f"State is at CDL step {state.cdl_step}, configuration allows {cfg.cdl_steps}.")
        if state.cdl_step >= 1 and not state.pseudo_labels:
            raise InvalidConfig("State past CDL step 0 carries no pseudo-labels.")
        external = self.restrict_external(external)

        for cdl_step in range(state.cdl_step + 1, cfg.cdl_steps + 1):
            if not state.pseudo_labels:
                state.pseudo_labels = self.generate_pseudo_labels(state, external)
            state.cdl_step = cdl_step
            state.epoch_in_step = 0
            logger.info("CDL step %d/%d.", cdl_step, cfg.cdl_steps)

            for epoch in range(cfg.epochs_per_step):
                for batch in compose_epoch(labeled, external, cfg.batch_size, state.rng):
                    self._cdl_update(state, labeled, external, batch, epoch)
                state.epoch_in_step = epoch + 1
                self.training_log.write("epoch", phase="cdl", cdl_step=cdl_step, epoch=epoch)

            state.pseudo_labels = self.generate_pseudo_labels(state, external)
            if self.checkpoint_dir:
                self._checkpoint(state)
        return state

    def _targets(self, state: TrainState, head: Heads, video_ids: List[str]) -> torch.Tensor:
        labels = state.pseudo_labels[head].labels
        try:
            return torch.from_numpy(np.stack([labels[video_id] for video_id in video_ids])).to(self.dtype)
        except KeyError as e:
            raise MissingFeatures(f"No pseudo-label for external video {e}.") from e

    def _cdl_update(self, state: TrainState, labeled: CorpusManifest, external: CorpusManifest,
                    batch: MiniBatch, epoch: int):
        cfg = self.config
        abnormal_ids = [pair[0] for pair in batch.pairs]
        normal_ids = [pair[1] for pair in batch.pairs]

        outputs = {}
        for head in (Heads.MAIN, Heads.AUX):
            module = state.heads[head]
            outputs[head] = (
                module(self._features(labeled, abnormal_ids, head)),
                module(self._features(labeled, normal_ids, head)),
                module(self._features(external, batch.external, head)),
            )
        z_main = outputs[Heads.MAIN][2].penultimate
        z_aux = outputs[Heads.AUX][2].penultimate
        uncertainty = losses.surrogate_variance(z_main.detach(), z_aux.detach(), cfg.tau)

        objectives, breakdowns = {}, {}
        for head in (Heads.MAIN, Heads.AUX):
            abnormal_out, normal_out, external_out = outputs[head]
            rank_terms = losses.ranking_loss(abnormal_out.scores, normal_out.scores, cfg.lambda1, cfg.lambda2)
            bce = losses.bce_loss(external_out.scores, self._targets(state, head, batch.external))
            weighted, cosine_term, ext = losses.external_loss_terms(
                uncertainty, bce, z_main, z_aux, cfg.lambda3, use_uncertainty=cfg.use_uncertainty
            )
            objectives[head] = losses.total_loss(rank_terms["rank"], ext, cfg.lambda4)
            rank, ext_value = rank_terms["rank"].item(), ext.item()
            breakdowns[head] = losses.LossBreakdown(
                rank=rank,
                hinge=rank_terms["hinge"].item(),
                temporal_smoothness=rank_terms["temporal_smoothness"].item(),
                sparsity=rank_terms["sparsity"].item(),
                ext=ext_value,
                bce_weighted=weighted.item(),
                cosine_term=cosine_term.item(),
                total=losses.total_loss(rank, ext_value, cfg.lambda4),
            )

        grads = {}
        for head in (Heads.MAIN, Heads.AUX):
            module = state.heads[head]
            named = list(module.named_parameters())
            values = torch.autograd.grad(
                objectives[head], [parameter for _, parameter in named], retain_graph=True, allow_unused=True
            )
            grads[head] = {
                name: torch.zeros_like(parameter) if value is None else value
                for (name, parameter), value in zip(named, values)
            }
        for head in (Heads.MAIN, Heads.AUX):
            self._apply_update(state, head, grads[head])

        self._log_step(state, "cdl", epoch, breakdowns, mean_s=float(uncertainty.values.mean()))

    def _checkpoint(self, state: TrainState):
        path = os.path.join(self.checkpoint_dir, checkpoint_name(state.cdl_step))
        save_checkpoint(state, self.config, path)
        self.training_log.write("checkpoint", cdl_step=state.cdl_step, path=os.path.basename(path))
