"""
Module to initialize evaluation.
"""

from cross_domain_analyzer.evaluation.metrics import (
    FrameScores, average_precision, roc_auc, segment_to_frame, spearman, spearman_with_pvalue
)
from cross_domain_analyzer.evaluation.open_set import open_set_split
from cross_domain_analyzer.evaluation.diagnostics import (
    CorrelationResult, confident_mass, default_bin_edges, per_video_mean_uncertainty,
    segment_diagnostics, uncertainty_cdf, uncertainty_error_correlation
)
