"""
Frame-level score extension and the evaluation metrics.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats
from sklearn.metrics import average_precision_score, roc_auc_score

from cross_domain_analyzer.errors import ConstantInput, EmptyVideo, LengthMismatch, NoPositives, SingleClass


@dataclass(frozen=True)
class FrameScores:
    """
    Per-frame anomaly scores of one video.
    """
    video_id: str
    scores: np.ndarray

    def __len__(self):
        return len(self.scores)


def segment_to_frame(seg_scores, n_f: int, video_id: str = "") -> FrameScores:
    """
    Extends segment scores to frames. With ``n_fs = floor(n_f / n_s)`` every segment but
    the last covers ``n_fs`` consecutive frames and the last segment covers the rest.
    Videos shorter than ``n_s`` frames map frame ``i`` to segment ``floor(i * n_s / n_f)``.

    Parameters
    ----------
    seg_scores : array-like
        ``n_s`` segment scores.
    n_f : int
        Number of frames.
    video_id : str
        Identifier carried into the result.

    Returns
    -------
    FrameScores
        ``n_f`` frame scores.
    """
    seg_scores = np.asarray(seg_scores, dtype=np.float64)
    n_s = len(seg_scores)
    if n_f < 1:
        raise EmptyVideo(f"Video {video_id} has no frames.")
    if n_s < 1:
        raise LengthMismatch("No segment scores to extend.")

    if n_f < n_s:
        index = (np.arange(n_f) * n_s) // n_f
    else:
        n_fs = n_f // n_s
        index = np.minimum(np.arange(n_f) // n_fs, n_s - 1)
    return FrameScores(video_id=video_id, scores=seg_scores[index])


def _check_binary(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(int)
    if scores.shape != labels.shape:
        raise LengthMismatch(f"{scores.shape[0]} scores for {labels.shape[0]} labels.")
    return scores, labels


def roc_auc(scores, labels) -> float:
    """
    Area under the ROC curve: ``P(s_pos > s_neg) + 0.5 * P(s_pos = s_neg)``.
    """
    scores, labels = _check_binary(scores, labels)
    if labels.min(initial=1) == labels.max(initial=0):
        raise SingleClass("ROC-AUC needs both positive and negative labels.")
    return float(roc_auc_score(labels, scores))


def average_precision(scores, labels) -> float:
    """
    Step-interpolated area under the precision-recall curve, ties grouped at one threshold.
    """
    scores, labels = _check_binary(scores, labels)
    if labels.sum() == 0:
        raise NoPositives("Average precision needs at least one positive label.")
    if labels.min() == 1:
        return 1.0
    return float(average_precision_score(labels, scores))


def spearman_with_pvalue(u, v):
    """
    Spearman correlation (Pearson correlation of average ranks) and its two-sided p-value.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise LengthMismatch(f"{len(u)} vs {len(v)} values.")
    if len(u) < 2 or np.ptp(u) == 0 or np.ptp(v) == 0:
        raise ConstantInput("Spearman correlation is undefined for constant input.")
    result = stats.spearmanr(u, v)
    return float(result[0]), float(result[1])


def spearman(u, v) -> float:
    """
    Spearman rank correlation in [-1, 1].
    """
    return spearman_with_pvalue(u, v)[0]
