"""
Processor for persisting evaluation results.
"""

import logging
import os

import plotly.graph_objects as go

import cross_domain_analyzer.utilities as utilities
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models.models_data import ModelsData
from cross_domain_analyzer.results.models_results import ModelsResults

logger = logging.getLogger(__name__)

METRICS_REPORT_NAME = "metrics.yaml"


class EvaluationResultsProcessor:
    """
    Writes the metrics report and the per-class AUC chart.
    """
    def __init__(self, models_data: ModelsData, models_results: ModelsResults):
        """
        Parameters
        ----------
        models_data : ModelsData
            Supplies the output directory.
        models_results : ModelsResults
            Holds the metrics produced by the evaluation.
        """
        self.data_models = models_data
        self.results_models = models_results

    def process(self):
        """
        Method for persisting evaluation results.
        """
        written = [self.save_report()]
        if self.results_models.metrics.get("per_class_auc"):
            written.append(self.plot_per_class_auc())
        self.results_models.written_files = written

    def save_report(self, filename=METRICS_REPORT_NAME):
        metrics = self.results_models.metrics
        report = {
            "auc": float(metrics["auc"]),
            "ap": None if metrics["ap"] is None else float(metrics["ap"]),
            "per_class_auc": {name: float(value) for name, value in metrics["per_class_auc"].items()},
            "n_videos": int(metrics["n_videos"]),
            "n_frames": int(metrics["n_frames"]),
            "config_hash": metrics["config_hash"],
            "checkpoint": metrics["checkpoint"],
            "streams_read": list(metrics["streams_read"]),
        }
        path = utilities.save_yaml(report, os.path.join(self.data_models.output_dir, filename))
        logger.info("Wrote metrics report to %s.", path)
        return path

    def plot_per_class_auc(self, filename="per_class_auc"):
        """
        Bar chart of the per-class AUC with the corpus-level AUC as a reference line.
        """
        metrics = self.results_models.metrics
        names = list(metrics["per_class_auc"])
        fig = go.Figure()
        fig.add_trace(go.Bar(
            x=names,
            y=[round(metrics["per_class_auc"][name] * 100, 2) for name in names],
            marker_color="#8e44ad",
            name="Class AUC",
        ))
        fig.add_hline(
            y=round(metrics["auc"] * 100, 2),
            line=dict(color="red", width=2, dash="dash"),
            annotation_text="Overall AUC",
        )
        fig.update_layout(
            title=f"Frame AUC per anomaly class - {metrics['checkpoint']['file']}",
            xaxis_title="Anomaly class",
            yaxis_title="AUC (%)",
            template="plotly_white",
        )
        return utilities.save_html(fig, filename, self.data_models.output_dir)
