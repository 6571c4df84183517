import os
from dataclasses import replace

import numpy as np
import pytest
import torch

from cross_domain_analyzer.errors import InvalidConfig, MissingLogs
from cross_domain_analyzer.models.cdl_trainer import CDLTrainer
from cross_domain_analyzer.models.checkpoint import checkpoint_name, list_checkpoints, load_checkpoint, save_checkpoint
from cross_domain_analyzer.models.models_data import load_models_data
from cross_domain_analyzer.models.training_processor import TrainingProcessor
from cross_domain_analyzer.processing_types import Heads
from cross_domain_analyzer.results.models_results import ModelsResults
from cross_domain_analyzer.results.training_log import TRAIN_LOG_NAME, TrainingLog, read_training_log

TRAIN_OVERRIDES = {"n_s": 8, "batch_size": 8, "epochs_step0": 2, "epochs_per_step": 2, "seed": 0}


def run_training(tiny_corpus, output_dir, cdl_steps, resume=""):
    models_data = load_models_data(document={
        "profile": "open-set",
        "train": dict(TRAIN_OVERRIDES, cdl_steps=cdl_steps),
        "paths": {
            "labeled_manifest": tiny_corpus["labeled"],
            "external_manifest": tiny_corpus["external"],
            "output_dir": str(output_dir),
        },
    })
    models_data.resume_path = resume
    models_results = ModelsResults()
    TrainingProcessor(models_data, models_results).process()
    return models_results.train_state


def test_checkpoint_name():
    assert checkpoint_name(7) == "checkpoint_step007.pt"


def test_round_trip_restores_every_field(tmp_path, labeled, external, tiny_config, feature_store):
    trainer = CDLTrainer(replace(tiny_config, cdl_steps=1), feature_store, TrainingLog())
    state = trainer.train_cdl(trainer.train_step0(labeled), labeled, external)
    path = str(tmp_path / checkpoint_name(state.cdl_step))
    save_checkpoint(state, trainer.config, path)

    restored, config = load_checkpoint(path)
    assert config == trainer.config
    assert (restored.cdl_step, restored.epoch_in_step, restored.global_step) == (1, 4, state.global_step)
    for head in (Heads.MAIN, Heads.AUX):
        original = state.heads[head].state_dict()
        for name, value in restored.heads[head].state_dict().items():
            assert torch.equal(value, original[name])
        assert restored.moments[head].step == state.moments[head].step
        assert restored.pseudo_labels[head].source_heads == state.pseudo_labels[head].source_heads
        for video_id, values in state.pseudo_labels[head].labels.items():
            np.testing.assert_array_equal(restored.pseudo_labels[head].labels[video_id], values)
    assert restored.rng.random() == state.rng.random()


def test_main_head_only_restore(tmp_path, labeled, step0_only, feature_store):
    trainer = CDLTrainer(step0_only, feature_store, TrainingLog(), checkpoint_dir=str(tmp_path))
    trainer.train_step0(labeled)
    state, _ = load_checkpoint(str(tmp_path / checkpoint_name(0)), heads=[Heads.MAIN])
    assert set(state.heads) == {Heads.MAIN}


def test_missing_checkpoints(tmp_path):
    with pytest.raises(MissingLogs):
        load_checkpoint(str(tmp_path / "checkpoint_step001.pt"))
    with pytest.raises(MissingLogs):
        list_checkpoints(str(tmp_path / "absent"))
    assert list_checkpoints(str(tmp_path)) == []


def test_training_writes_one_checkpoint_per_step(tmp_path, tiny_corpus):
    run_training(tiny_corpus, tmp_path, cdl_steps=2)
    assert [step for step, _ in list_checkpoints(str(tmp_path))] == [0, 1, 2]
    events = list(read_training_log(str(tmp_path / TRAIN_LOG_NAME)))
    assert [event["cdl_step"] for event in events if event["event"] == "checkpoint"] == [0, 1, 2]


def test_resumed_run_matches_uninterrupted_run(tmp_path, tiny_corpus):
    full_dir, resumed_dir = tmp_path / "full", tmp_path / "resumed"
    full = run_training(tiny_corpus, full_dir, cdl_steps=3)
    run_training(tiny_corpus, resumed_dir, cdl_steps=1)
    resumed = run_training(
        tiny_corpus, resumed_dir, cdl_steps=3, resume=str(resumed_dir / checkpoint_name(1))
    )

    full_events = list(read_training_log(str(full_dir / TRAIN_LOG_NAME)))
    resumed_events = list(read_training_log(str(resumed_dir / TRAIN_LOG_NAME)))
    strip = lambda events: [{k: v for k, v in event.items() if k != "path"} for event in events]
    assert strip(resumed_events) == strip(full_events)
    assert resumed.global_step == full.global_step
    for name, value in full.heads[Heads.MAIN].state_dict().items():
        assert torch.equal(resumed.heads[Heads.MAIN].state_dict()[name], value)


def test_resume_rejects_changed_settings(tmp_path, tiny_corpus):
    run_training(tiny_corpus, tmp_path, cdl_steps=1)
    models_data = load_models_data(document={
        "train": dict(TRAIN_OVERRIDES, cdl_steps=2, lambda3=0.0),
        "paths": {
            "labeled_manifest": tiny_corpus["labeled"],
            "external_manifest": tiny_corpus["external"],
            "output_dir": str(tmp_path),
        },
    })
    models_data.resume_path = os.path.join(str(tmp_path), checkpoint_name(1))
    with pytest.raises(InvalidConfig):
        TrainingProcessor(models_data, ModelsResults()).process()
