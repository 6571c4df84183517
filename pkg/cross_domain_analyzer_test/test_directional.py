"""
Long runs on larger synthetic corpora checking the direction of the headline effects.
Run with ``pytest --runslow``.
"""

from dataclasses import replace

import numpy as np
import pytest

from cross_domain_analyzer.data import FeatureStore, generate, load_manifest
from cross_domain_analyzer.evaluation import (
    confident_mass, per_video_mean_uncertainty, segment_diagnostics, uncertainty_error_correlation
)
from cross_domain_analyzer.evaluation.evaluation_processor import evaluate_head
from cross_domain_analyzer.models.cdl_trainer import CDLTrainer
from cross_domain_analyzer.models.train_config import resolve_train_config
from cross_domain_analyzer.processing_types import Heads
from cross_domain_analyzer.results.training_log import TrainingLog

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def cross_domain_corpus(tmp_path_factory, tiny_spec):
    spec = replace(
        tiny_spec,
        n_labeled=64,
        n_external=64,
        n_test_target=32,
        frames_range=(64, 160),
        class_windows={name: (16, 40) for name in tiny_spec.class_windows},
        dim_main=16,
        dim_aux=16,
        domain_shift=1.0,
        seed=11,
    )
    paths = generate(spec, str(tmp_path_factory.mktemp("directional")))
    return {split: load_manifest(path) for split, path in paths.items()}


def directional_config(**overrides):
    values = {"n_s": 16, "batch_size": 16, "epochs_step0": 30, "cdl_steps": 10, "epochs_per_step": 4, "seed": 0}
    values.update(overrides)
    return resolve_train_config("open-set", overrides=values)


def test_step0_separates_a_planted_corpus(cross_domain_corpus):
    config = directional_config(epochs_step0=200, cdl_steps=0)
    trainer = CDLTrainer(config, FeatureStore(), TrainingLog())
    trainer.train_step0(cross_domain_corpus["labeled"])
    last_epoch = [event for event in trainer.training_log.events("step") if event["epoch"] == 199]
    hinge = np.mean([event["losses"]["main"]["hinge"] for event in last_epoch])
    assert hinge < 0.1


def test_confident_mass_grows_across_cdl_steps(cross_domain_corpus):
    labeled, external = cross_domain_corpus["labeled"], cross_domain_corpus["external"]
    config = directional_config()
    store = FeatureStore()
    trainer = CDLTrainer(config, store, TrainingLog())
    state = trainer.train_step0(labeled)

    masses = {}
    for step in (1, config.cdl_steps):
        trainer.config = replace(config, cdl_steps=step)
        state = trainer.train_cdl(state, labeled, external)
        diagnostics = segment_diagnostics(state.heads, external, store, config)
        masses[step] = confident_mass(per_video_mean_uncertainty(diagnostics))
    assert masses[config.cdl_steps] > masses[1]


def test_uncertainty_tracks_prediction_error(cross_domain_corpus):
    labeled, external = cross_domain_corpus["labeled"], cross_domain_corpus["external"]
    rhos = {}
    for lambda3 in (1e-3, 0.0):
        config = directional_config(lambda3=lambda3, cdl_steps=3)
        store = FeatureStore()
        trainer = CDLTrainer(config, store, TrainingLog())
        state = trainer.train_cdl(trainer.train_step0(labeled), labeled, external)
        rhos[lambda3] = uncertainty_error_correlation(state.heads, external, store, config).rho
    assert rhos[1e-3] <= -0.2
    assert rhos[0.0] >= rhos[1e-3]


def test_cdl_beats_the_step0_baseline_on_the_target_domain(cross_domain_corpus):
    labeled, external, target = (cross_domain_corpus[split] for split in ("labeled", "external", "test_target"))
    wins = 0
    for seed in range(5):
        config = directional_config(seed=seed, cdl_steps=5)
        store = FeatureStore()
        trainer = CDLTrainer(config, store, TrainingLog())
        state = trainer.train_step0(labeled)
        baseline = evaluate_head(state.heads[Heads.MAIN], target, store, config)["auc"]
        state = trainer.train_cdl(state, labeled, external)
        adapted = evaluate_head(state.heads[Heads.MAIN], target, store, config)["auc"]
        wins += adapted > baseline
    assert wins >= 4
