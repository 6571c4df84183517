"""
Processor for persisting and plotting uncertainty diagnostics.
"""

import logging
import os
from typing import List

import matplotlib.pyplot as plt
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

import cross_domain_analyzer.utilities as utilities
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models.models_data import ModelsData
from cross_domain_analyzer.results.models_results import ModelsResults

logger = logging.getLogger(__name__)

CDF_TABLE_NAME = "uncertainty_cdf.csv"
SUMMARY_TABLE_NAME = "uncertainty_summary.csv"
CORRELATION_TABLE_NAME = "correlation_series.csv"
LOSS_TABLE_NAME = "training_losses.csv"


def loss_table(events: List[dict]) -> pd.DataFrame:
    """
    One row per optimizer step and head from the ``step`` events of a training log.
    """
    rows = []
    for event in events:
        if event.get("event") != "step":
            continue
        for head, terms in event["losses"].items():
            rows.append({
                "global_step": event["global_step"],
                "phase": event["phase"],
                "cdl_step": event["cdl_step"],
                "head": head,
                "mean_s": event.get("mean_s"),
                **terms,
            })
    return pd.DataFrame(rows)


class DiagnosticsResultsProcessor:
    """
    Writes the CDF table, the per-step summary, the correlation series and their plots.
    """
    def __init__(self, models_data: ModelsData, models_results: ModelsResults, events: List[dict]):
        """
        Parameters
        ----------
        models_data : ModelsData
            Supplies the output directory.
        models_results : ModelsResults
            Holds the diagnostic tables.
        events : list of dict
            Training log of the diagnosed run.
        """
        self.data_models = models_data
        self.results_models = models_results
        self.events = events

    def process(self):
        """
        Method for persisting the diagnostic bundle.
        """
        output_dir = self.data_models.output_dir
        results = self.results_models
        written = [
            utilities.save_csv(results.uncertainty_cdf, os.path.join(output_dir, CDF_TABLE_NAME), index=True),
            utilities.save_csv(results.uncertainty_summary, os.path.join(output_dir, SUMMARY_TABLE_NAME)),
            self.plot_uncertainty_cdf(),
            self.plot_uncertainty_cdf_static(),
        ]
        if results.correlation_series is not None:
            written.append(utilities.save_csv(
                results.correlation_series, os.path.join(output_dir, CORRELATION_TABLE_NAME)
            ))
            if not results.correlation_series.empty:
                written.append(self.plot_correlation_series())

        losses = loss_table(self.events)
        if not losses.empty:
            written.append(utilities.save_csv(losses, os.path.join(output_dir, LOSS_TABLE_NAME)))
            written.append(self.plot_training_loss(losses))
        results.written_files = written
        logger.info("Wrote %d diagnostic files to %s.", len(written), output_dir)

    def _cdf_long(self) -> pd.DataFrame:
        table = self.results_models.uncertainty_cdf
        frame = table.reset_index().melt(id_vars="cdl_step", var_name="bin_edge", value_name="cdf")
        frame["bin_edge"] = frame["bin_edge"].astype(float)
        frame["cdl_step"] = frame["cdl_step"].astype(str)
        return frame

    def plot_uncertainty_cdf(self, filename="uncertainty_cdf"):
        """
        Interactive CDF of per-video mean uncertainty, one line per CDL step.
        """
        fig = px.line(
            self._cdf_long(),
            x="bin_edge",
            y="cdf",
            color="cdl_step",
            line_shape="hv",
            labels={"bin_edge": "Mean uncertainty score", "cdf": "Fraction of videos", "cdl_step": "CDL step"},
            title="Per-video mean uncertainty CDF",
        )
        fig.update_layout(template="plotly_white")
        return utilities.save_html(fig, filename, self.data_models.output_dir)

    def plot_uncertainty_cdf_static(self, filename="uncertainty_cdf"):
        table = self.results_models.uncertainty_cdf
        edges = [float(edge) for edge in table.columns]
        fig, ax = plt.subplots(figsize=(7, 4.5))
        colors = plt.cm.viridis([i / max(1, len(table) - 1) for i in range(len(table))])
        for color, (cdl_step, row) in zip(colors, table.iterrows()):
            ax.step(edges, row.values, where="post", color=color, label=f"step {cdl_step}")
        ax.set_xlabel("Mean uncertainty score")
        ax.set_ylabel("Fraction of videos")
        ax.set_xlim(0.0, 1.0)
        ax.set_ylim(0.0, 1.02)
        ax.grid(alpha=0.3)
        ax.legend(fontsize="small", ncol=2)
        return utilities.save_png(fig, filename, self.data_models.output_dir)

    def plot_correlation_series(self, filename="correlation_series"):
        series = self.results_models.correlation_series
        fig = go.Figure()
        fig.add_trace(go.Scatter(
            x=series["cdl_step"],
            y=series["rho"],
            mode="lines+markers",
            line=dict(color="#8e44ad", width=2),
            customdata=series[["p_value", "n_segments"]],
            hovertemplate="step %{x}<br>rho %{y:.3f}<br>p %{customdata[0]:.2e}<br>%{customdata[1]} segments",
            name="Spearman rho",
        ))
        fig.add_hline(y=0.0, line=dict(color="gray", width=1, dash="dot"))
        fig.update_layout(
            title="Uncertainty vs. pseudo-label error",
            xaxis_title="CDL step",
            yaxis_title="Spearman correlation",
            template="plotly_white",
        )
        return utilities.save_html(fig, filename, self.data_models.output_dir)

    def plot_training_loss(self, losses: pd.DataFrame, filename="training_loss"):
        fig = px.line(
            losses,
            x="global_step",
            y="total",
            color="head",
            hover_data=["phase", "cdl_step", "rank", "ext"],
            labels={"global_step": "Optimizer step", "total": "Total loss", "head": "Head"},
            title="Training loss",
        )
        fig.update_layout(template="plotly_white")
        return utilities.save_html(fig, filename, self.data_models.output_dir)
