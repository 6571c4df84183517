import copy
import os
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
import torch

from cross_domain_analyzer.errors import ConstantInput, EmptyInput, MissingGroundTruth, MissingLogs
from cross_domain_analyzer.evaluation import (
    confident_mass, default_bin_edges, per_video_mean_uncertainty, segment_diagnostics, uncertainty_cdf,
    uncertainty_error_correlation
)
from cross_domain_analyzer.evaluation.diagnostics import segment_ground_truth
from cross_domain_analyzer.evaluation.diagnostics_processor import DiagnosticsProcessor
from cross_domain_analyzer.models.cdl_trainer import CDLTrainer
from cross_domain_analyzer.models.models_data import load_models_data
from cross_domain_analyzer.models.models_factory import ModelsFactory
from cross_domain_analyzer.processing_types import Heads, Runs
from cross_domain_analyzer.results.models_results import ModelsResults


def test_cdf_of_confident_videos():
    edges = default_bin_edges(10)
    cdf = uncertainty_cdf([1.0, 1.0, 1.0], edges)
    assert np.all(cdf[:-1] == 0.0)
    assert cdf[-1] == 1.0


def test_cdf_of_evenly_spread_values():
    edges = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(uncertainty_cdf([0.25, 0.5, 0.75, 1.0], edges), [0.0, 0.25, 0.5, 0.75, 1.0])


def test_cdf_errors():
    with pytest.raises(EmptyInput):
        uncertainty_cdf([], default_bin_edges())
    with pytest.raises(ValueError):
        uncertainty_cdf([0.5], [0.0, 0.5, 0.5, 1.0])
    with pytest.raises(ValueError):
        uncertainty_cdf([0.5], [0.1, 1.0])
    with pytest.raises(ValueError):
        uncertainty_cdf([1.5], default_bin_edges())


def test_confident_mass():
    assert confident_mass([0.95, 0.5, 0.9, 0.2]) == 0.5
    with pytest.raises(EmptyInput):
        confident_mass([])


def test_segment_ground_truth_is_the_mean_frame_label():
    labels = np.array([0, 0, 1, 1, 1, 0, 0, 0, 1, 1])
    truth, covered = segment_ground_truth(labels, 4)
    np.testing.assert_allclose(truth, [0.0, 1.0, 0.5, 0.5])
    assert covered.all()
    _, covered = segment_ground_truth(np.array([1, 0]), 4)
    assert covered.tolist() == [True, False, True, False]


def test_identical_heads_are_fully_certain(labeled, external, step0_only, feature_store):
    config = replace(step0_only, aux_stream="main")
    state = CDLTrainer(step0_only, feature_store).initial_state(labeled)
    heads = {Heads.MAIN: state.heads[Heads.MAIN], Heads.AUX: copy.deepcopy(state.heads[Heads.MAIN])}
    diagnostics = segment_diagnostics(heads, external, feature_store, config)
    np.testing.assert_allclose(per_video_mean_uncertainty(diagnostics), 1.0, rtol=1e-5)


def test_constant_uncertainty_has_no_correlation(labeled, external, step0_only, feature_store):
    state = CDLTrainer(step0_only, feature_store).initial_state(labeled)
    with torch.no_grad():
        state.heads[Heads.MAIN].classifier[2].weight.zero_()
    diagnostics = segment_diagnostics(state.heads, external, feature_store, step0_only)
    assert all(np.all(item.uncertainty == item.uncertainty[0]) for item in diagnostics.values())
    with pytest.raises(ConstantInput):
        uncertainty_error_correlation(state.heads, external, feature_store, step0_only, diagnostics)


def test_correlation_needs_ground_truth(labeled, step0_only, feature_store):
    state = CDLTrainer(step0_only, feature_store).initial_state(labeled)
    with pytest.raises(MissingGroundTruth):
        uncertainty_error_correlation(state.heads, labeled, feature_store, step0_only)


def test_correlation_covers_every_segment(labeled, external, step0_only, feature_store):
    state = CDLTrainer(step0_only, feature_store).initial_state(labeled)
    result = uncertainty_error_correlation(state.heads, external, feature_store, step0_only)
    assert -1.0 <= result.rho <= 1.0
    assert 0.0 <= result.p_value <= 1.0
    assert result.n_segments == len(external) * step0_only.n_s


@pytest.fixture(scope="module")
def trained_run(tmp_path_factory, tiny_corpus):
    run_dir = tmp_path_factory.mktemp("diagnosed_run")
    models_data = load_models_data(document={
        "train": {"n_s": 8, "batch_size": 8, "epochs_step0": 2, "cdl_steps": 2, "epochs_per_step": 2, "seed": 0},
        "paths": {
            "labeled_manifest": tiny_corpus["labeled"],
            "external_manifest": tiny_corpus["external"],
            "output_dir": str(run_dir),
        },
    })
    ModelsFactory(models_data, ModelsResults()).run(Runs.TRAIN)
    return run_dir


def diagnose(run_dir, out_dir, external_manifest=""):
    models_data = load_models_data(document={"paths": {"external_manifest": external_manifest}})
    models_data.run_dir = str(run_dir)
    models_data.output_dir = str(out_dir)
    models_results = ModelsResults()
    DiagnosticsProcessor(models_data, models_results).process()
    return models_results


def test_diagnose_writes_one_row_per_checkpoint(trained_run, tiny_corpus, tmp_path):
    results = diagnose(trained_run, tmp_path, tiny_corpus["external"])
    cdf = results.uncertainty_cdf
    assert list(cdf.index) == [0, 1, 2]
    assert np.all(cdf["1.00"] == 1.0)
    assert np.all(np.diff(cdf.to_numpy(), axis=1) >= 0)
    assert list(results.correlation_series["cdl_step"]) == [1, 2]
    written = pd.read_csv(os.path.join(str(tmp_path), "uncertainty_cdf.csv"), index_col=0)
    assert written.shape == cdf.shape
    assert os.path.exists(os.path.join(str(tmp_path), "training_losses.csv"))


def test_diagnose_skips_correlation_without_ground_truth(trained_run, tiny_corpus, tmp_path):
    results = diagnose(trained_run, tmp_path, tiny_corpus["labeled"])
    assert results.correlation_series is None
    assert not os.path.exists(os.path.join(str(tmp_path), "correlation_series.csv"))


def test_diagnose_reads_the_resolved_run_config(trained_run, tmp_path):
    results = diagnose(trained_run, tmp_path)
    assert len(results.uncertainty_summary) == 3


def test_diagnose_without_checkpoints(tmp_path):
    with pytest.raises(MissingLogs):
        diagnose(tmp_path, tmp_path / "out", "unused.yaml")


def test_diagnose_replays_the_capped_external_set(tiny_corpus, tmp_path):
    run_dir = tmp_path / "capped_run"
    models_data = load_models_data(document={
        "train": {
            "n_s": 8, "batch_size": 8, "epochs_step0": 1, "cdl_steps": 1, "epochs_per_step": 1, "seed": 0,
            "max_external_videos": 8,
        },
        "paths": {
            "labeled_manifest": tiny_corpus["labeled"],
            "external_manifest": tiny_corpus["external"],
            "output_dir": str(run_dir),
        },
    })
    ModelsFactory(models_data, ModelsResults()).run(Runs.TRAIN)

    results = diagnose(run_dir, tmp_path / "out", tiny_corpus["external"])
    assert list(results.correlation_series["n_segments"]) == [8 * 8]
