"""
Objectives of the CDL framework: MIL ranking loss, BCE against soft pseudo-labels,
surrogate variance, external loss and total objective.
"""

from dataclasses import asdict, dataclass
from typing import Dict, Tuple

import torch

from cross_domain_analyzer.data.video_data import UncertaintyScores
from cross_domain_analyzer.errors import LengthMismatch, ShapeMismatch

BCE_EPSILON = 1e-7
ZERO_NORM = 1e-12


@dataclass(frozen=True)
class LossBreakdown:
    """
    Scalar values of every term of one optimization step of one head.
    """
    rank: float = 0.0
    hinge: float = 0.0
    temporal_smoothness: float = 0.0
    sparsity: float = 0.0
    ext: float = 0.0
    bce_weighted: float = 0.0
    cosine_term: float = 0.0
    total: float = 0.0

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def _as_batch(values: torch.Tensor) -> torch.Tensor:
    return values.unsqueeze(0) if values.ndim == 1 else values


def ranking_loss(
        scores_abnormal: torch.Tensor,
        scores_normal: torch.Tensor,
        lambda1: float,
        lambda2: float
) -> Dict[str, torch.Tensor]:
    """
    MIL ranking loss of (abnormal, normal) bag pairs.

    ``hinge = max(0, 1 - max(abnormal) + max(normal))``, the smoothness term sums squared
    differences of adjacent abnormal scores and the sparsity term sums abnormal scores.
    With several pairs (leading dimension) every term is averaged over pairs.

    Parameters
    ----------
    scores_abnormal, scores_normal : torch.Tensor
        ``n_s`` or ``P x n_s`` scores.
    lambda1, lambda2 : float
        Smoothness and sparsity weights.

    Returns
    -------
    dict
        ``hinge``, ``temporal_smoothness``, ``sparsity`` and ``rank`` tensors.
    """
    abnormal = _as_batch(scores_abnormal)
    normal = _as_batch(scores_normal)
    if abnormal.shape != normal.shape:
        raise LengthMismatch(f"Abnormal scores {tuple(abnormal.shape)} vs normal {tuple(normal.shape)}.")

    hinge = torch.clamp(1.0 - abnormal.max(dim=1).values + normal.max(dim=1).values, min=0.0).mean()
    smoothness = ((abnormal[:, 1:] - abnormal[:, :-1]) ** 2).sum(dim=1).mean()
    sparsity = abnormal.sum(dim=1).mean()
    return {
        "hinge": hinge,
        "temporal_smoothness": smoothness,
        "sparsity": sparsity,
        "rank": hinge + lambda1 * smoothness + lambda2 * sparsity,
    }


def bce_loss(predictions: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """
    Element-wise binary cross-entropy against soft targets, predictions clamped to
    ``[eps, 1 - eps]``.
    """
    if predictions.shape != targets.shape:
        raise LengthMismatch(f"Predictions {tuple(predictions.shape)} vs targets {tuple(targets.shape)}.")
    clamped = predictions.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON)
    return -(targets * torch.log(clamped) + (1.0 - targets) * torch.log(1.0 - clamped))


def cosine_similarity(first: torch.Tensor, second: torch.Tensor) -> torch.Tensor:
    """
    Row-wise cosine similarity over the last dimension; 0 when either norm is below 1e-12.
    """
    if first.shape != second.shape:
        raise ShapeMismatch(f"Representations {tuple(first.shape)} vs {tuple(second.shape)}.")
    first_norm = torch.linalg.vector_norm(first, dim=-1)
    second_norm = torch.linalg.vector_norm(second, dim=-1)
    degenerate = (first_norm < ZERO_NORM) | (second_norm < ZERO_NORM)
    denominator = torch.where(degenerate, torch.ones_like(first_norm), first_norm * second_norm)
    cosine = (first * second).sum(dim=-1) / denominator
    cosine = torch.where(degenerate, torch.zeros_like(cosine), cosine)
    return cosine.clamp(-1.0, 1.0)


def surrogate_variance(z_main: torch.Tensor, z_aux: torch.Tensor, tau: float) -> UncertaintyScores:
    """
    Uncertainty regularization scores ``s = exp(tau * (cos(z_m, z_a) - 1))``.

    Parameters
    ----------
    z_main, z_aux : torch.Tensor
        Penultimate representations of the two heads, ``... x n_s x 32``.
    tau : float
        Temperature, positive.

    Returns
    -------
    UncertaintyScores
        Scores in ``[exp(-2 tau), 1]``.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}.")
    return UncertaintyScores(values=torch.exp(tau * (cosine_similarity(z_main, z_aux) - 1.0)), tau=tau)


def probability_variance(p_main: torch.Tensor, p_aux: torch.Tensor) -> torch.Tensor:
    """
    Mean squared difference between the two heads' scores.
    """
    if p_main.shape != p_aux.shape:
        raise LengthMismatch(f"Scores {tuple(p_main.shape)} vs {tuple(p_aux.shape)}.")
    return ((p_main - p_aux) ** 2).mean()


def external_loss_terms(
        uncertainty: UncertaintyScores,
        bce: torch.Tensor,
        z_main: torch.Tensor,
        z_aux: torch.Tensor,
        lambda3: float,
        use_uncertainty: bool = True
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    Weighted BCE term, cosine term and external loss over an external mini-batch.

    S enters as a constant weight; gradients reach the representations through the
    cosine term only.

    Returns
    -------
    tuple
        ``(mean(S * bce), mean(lambda3 * cos), ext)`` with ``ext`` their difference.
    """
    weights = uncertainty.values.detach()
    if not use_uncertainty:
        weights = torch.ones_like(weights)
    if weights.shape != bce.shape:
        raise ShapeMismatch(f"Uncertainty {tuple(weights.shape)} vs bce {tuple(bce.shape)}.")
    cosine = cosine_similarity(z_main, z_aux)
    if cosine.shape != bce.shape:
        raise ShapeMismatch(f"Representations give {tuple(cosine.shape)}, bce has {tuple(bce.shape)}.")
    weighted = (weights * bce).mean()
    cosine_term = (lambda3 * cosine).mean()
    return weighted, cosine_term, weighted - cosine_term


def external_loss(
        uncertainty: UncertaintyScores,
        bce: torch.Tensor,
        z_main: torch.Tensor,
        z_aux: torch.Tensor,
        lambda3: float,
        use_uncertainty: bool = True
) -> torch.Tensor:
    """
    ``1/(n_s n_b) * sum_ij (S_ij * bce_ij - lambda3 * cos(Z_m_ij, Z_a_ij))``.

    Parameters
    ----------
    uncertainty : UncertaintyScores
        ``n_b x n_s`` scores of the external videos.
    bce : torch.Tensor
        ``n_b x n_s`` per-segment BCE against pseudo-labels.
    z_main, z_aux : torch.Tensor
        ``n_b x n_s x 32`` penultimate representations.
    lambda3 : float
        Cosine term weight.
    use_uncertainty : bool
        When false every segment is weighted by 1.

    Returns
    -------
    torch.Tensor
        Scalar loss.
    """
    return external_loss_terms(uncertainty, bce, z_main, z_aux, lambda3, use_uncertainty)[2]


def total_loss(rank, ext, lambda4: float):
    """
    ``rank + lambda4 * ext``.
    """
    return rank + lambda4 * ext
