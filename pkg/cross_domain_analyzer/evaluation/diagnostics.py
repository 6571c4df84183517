"""
Uncertainty diagnostics: per-video score CDFs and the correlation between uncertainty
scores and pseudo-label error.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import torch

from cross_domain_analyzer.data.corpus_manifest import CorpusManifest
from cross_domain_analyzer.data.feature_store import FeatureStore
from cross_domain_analyzer.errors import EmptyInput, MissingGroundTruth
from cross_domain_analyzer.evaluation.metrics import segment_to_frame, spearman_with_pvalue
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models import losses
from cross_domain_analyzer.models.train_config import TrainConfig
from cross_domain_analyzer.processing_types import Heads

logger = logging.getLogger(__name__)

CONFIDENT_THRESHOLD = 0.9


@dataclass(frozen=True)
class CorrelationResult:
    """
    Spearman correlation between segment uncertainty scores and BCE against ground truth.
    """
    rho: float
    p_value: float
    n_segments: int


@dataclass(frozen=True)
class SegmentDiagnostics:
    """
    Uncertainty scores and main-head scores of every segment of one video.
    """
    uncertainty: np.ndarray
    main_scores: np.ndarray


def default_bin_edges(n_bins: int = 20) -> np.ndarray:
    return np.linspace(0.0, 1.0, n_bins + 1)


def uncertainty_cdf(per_video_mean_s, bin_edges) -> np.ndarray:
    """
    Fraction of videos whose mean uncertainty score is at most each bin edge.

    Parameters
    ----------
    per_video_mean_s : array-like
        Mean score of every video, in [0, 1].
    bin_edges : array-like
        Strictly increasing edges from at most 0 to at least 1.

    Returns
    -------
    numpy.ndarray
        Cumulative fractions, one per edge, ending at 1.
    """
    values = np.asarray(per_video_mean_s, dtype=np.float64)
    edges = np.asarray(bin_edges, dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("No per-video scores to accumulate.")
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("Bin edges must be strictly increasing.")
    if edges[0] > 0.0 or edges[-1] < 1.0:
        raise ValueError("Bin edges must span [0, 1].")
    if np.any(values < 0.0) or np.any(values > 1.0):
        raise ValueError("Uncertainty scores must lie in [0, 1].")
    return np.searchsorted(np.sort(values), edges, side="right") / values.size


def confident_mass(per_video_mean_s, threshold: float = CONFIDENT_THRESHOLD) -> float:
    """
    Fraction of videos whose mean uncertainty score lies in ``[threshold, 1]``.
    """
    values = np.asarray(per_video_mean_s, dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("No per-video scores.")
    return float(np.mean(values >= threshold))


def segment_diagnostics(
        heads: Dict[Heads, torch.nn.Module],
        external: CorpusManifest,
        feature_store: FeatureStore,
        config: TrainConfig
) -> Dict[str, SegmentDiagnostics]:
    """
    Runs both heads on every external video and collects segment uncertainty scores and
    main-head scores.
    """
    results = {}
    with torch.no_grad():
        for record in external.records:
            outputs = {}
            for head, stream in ((Heads.MAIN, config.main_stream), (Heads.AUX, config.aux_stream)):
                module = heads[head]
                dtype = next(module.parameters()).dtype
                features = torch.from_numpy(np.array(feature_store.load(record, stream, config.n_s))).to(dtype)
                outputs[head] = module(features)
            uncertainty = losses.surrogate_variance(
                outputs[Heads.MAIN].penultimate, outputs[Heads.AUX].penultimate, config.tau
            )
            results[record.video_id] = SegmentDiagnostics(
                uncertainty=uncertainty.values.double().numpy(),
                main_scores=outputs[Heads.MAIN].scores.double().numpy(),
            )
    return results


def per_video_mean_uncertainty(diagnostics: Dict[str, SegmentDiagnostics]) -> np.ndarray:
    """
    Mean uncertainty score of every video, in manifest order.
    """
    return np.array([float(np.mean(item.uncertainty)) for item in diagnostics.values()])


def segment_ground_truth(frame_labels, n_s: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean frame label of every segment under the segment-to-frame assignment, plus a mask
    of segments that own at least one frame.
    """
    frame_labels = np.asarray(frame_labels, dtype=np.float64)
    owner = segment_to_frame(np.arange(n_s), len(frame_labels)).scores.astype(np.int64)
    counts = np.bincount(owner, minlength=n_s)
    sums = np.bincount(owner, weights=frame_labels, minlength=n_s)
    covered = counts > 0
    truth = np.zeros(n_s)
    truth[covered] = sums[covered] / counts[covered]
    return truth, covered


def uncertainty_error_correlation(
        heads: Dict[Heads, torch.nn.Module],
        external: CorpusManifest,
        feature_store: FeatureStore,
        config: TrainConfig,
        diagnostics: Optional[Dict[str, SegmentDiagnostics]] = None
) -> CorrelationResult:
    """
    Spearman correlation over all external segments between the uncertainty score and the
    BCE of the main head's prediction against the segment-mean ground truth.

    Parameters
    ----------
    heads : dict
        Main and auxiliary heads.
    external : CorpusManifest
        External corpus carrying frame labels.
    feature_store : FeatureStore
        Source of pooled features.
    config : TrainConfig
        Supplies n_s, tau and the stream names.
    diagnostics : dict, optional
        Precomputed ``segment_diagnostics`` of the same heads and corpus.

    Returns
    -------
    CorrelationResult
        Correlation, p-value and number of segments used.
    """
    if not external.has_frame_labels:
        raise MissingGroundTruth("External corpus has no frame labels.")
    if diagnostics is None:
        diagnostics = segment_diagnostics(heads, external, feature_store, config)
    n_s = config.n_s

    uncertainty, errors = [], []
    for record in external.records:
        item = diagnostics[record.video_id]
        truth, covered = segment_ground_truth(record.frame_labels, n_s)
        bce = losses.bce_loss(torch.from_numpy(item.main_scores), torch.from_numpy(truth)).numpy()
        uncertainty.append(item.uncertainty[covered])
        errors.append(bce[covered])
    uncertainty = np.concatenate(uncertainty)
    errors = np.concatenate(errors)
    rho, p_value = spearman_with_pvalue(uncertainty, errors)
    logger.info("Uncertainty/error Spearman correlation %.4f (p=%.2e, %d segments).", rho, p_value, len(errors))
    return CorrelationResult(rho=rho, p_value=p_value, n_segments=len(errors))
