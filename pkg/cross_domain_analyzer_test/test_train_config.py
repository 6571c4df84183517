import os

import pytest
import yaml

from cross_domain_analyzer.errors import InvalidConfig
from cross_domain_analyzer.models.models_data import load_models_data
from cross_domain_analyzer.models.train_config import TrainConfig, resolve_train_config


def test_open_set_profile_defaults():
    config = resolve_train_config("open-set")
    assert (config.lambda1, config.lambda2, config.lambda3, config.lambda4) == (5e-4, 5e-4, 1e-3, 700.0)
    assert (config.n_s, config.tau, config.batch_size) == (64, 1.25, 64)
    assert (config.epochs_step0, config.cdl_steps, config.epochs_per_step) == (200, 40, 4)
    assert config.pseudo_label_mode == "self"


def test_cross_domain_profile_and_pairing():
    config = resolve_train_config("cross-domain")
    assert (config.lambda1, config.lambda2) == (5e-3, 1e-3)
    xdv_source = resolve_train_config("cross-domain", "xdv+ucf")
    assert xdv_source.batch_size == 32
    assert xdv_source.lambda4 == 700.0
    assert (xdv_source.lr_encoder, xdv_source.lr_fc) == (5e-5, 1e-4)


def test_overrides_win_over_presets():
    config = resolve_train_config("cross-domain", "ucf+hacs", {"lambda4": 1250.0, "seed": 9})
    assert config.lambda4 == 1250.0
    assert config.seed == 9


def test_batch_partition():
    config = TrainConfig(batch_size=64)
    assert (config.pairs_per_batch, config.external_per_batch) == (16, 32)


@pytest.mark.parametrize("overrides", [
    {"batch_size": 6},
    {"batch_size": 0},
    {"tau": 0.0},
    {"lambda3": -1e-3},
    {"lr_fc": 0.0},
    {"n_s": 1},
    {"cdl_steps": -1},
    {"pseudo_label_mode": "mixed"},
    {"max_external_videos": 0},
    {"learning_rate": 1e-3},
])
def test_invalid_values_are_rejected(overrides):
    with pytest.raises(InvalidConfig):
        resolve_train_config("open-set", overrides=overrides)


def test_unknown_profile_and_misplaced_pairing():
    with pytest.raises(InvalidConfig):
        resolve_train_config("semi-supervised")
    with pytest.raises(InvalidConfig):
        resolve_train_config("cross-domain", "ucf+kinetics")
    with pytest.raises(InvalidConfig):
        resolve_train_config("open-set", "ucf+hacs")


def test_config_file_and_command_line_precedence(tmp_path):
    config_path = tmp_path / "run.yaml"
    config_path.write_text(yaml.safe_dump({
        "profile": "cross-domain",
        "pairing": "xdv+hacs",
        "train": {"epochs_step0": 3, "seed": 1},
        "paths": {"labeled_manifest": "corpus/labeled.yaml", "output_dir": "/tmp/absolute"},
        "synth": {"seed": 1},
        "workers": 2,
    }))
    models_data = load_models_data(str(config_path), seed=7, workers=3)
    config = models_data.train_config
    assert config.lambda4 == 1250.0
    assert config.epochs_step0 == 3
    assert config.seed == 7
    assert models_data.synth_spec.seed == 7
    assert models_data.workers == 3
    assert models_data.labeled_manifest == os.path.join(str(tmp_path), "corpus", "labeled.yaml")
    assert models_data.output_dir == "/tmp/absolute"


def test_profile_override_from_command_line(tmp_path):
    config_path = tmp_path / "run.yaml"
    config_path.write_text(yaml.safe_dump({"profile": "cross-domain"}))
    assert load_models_data(str(config_path), profile="open-set").train_config.lambda1 == 5e-4


def test_config_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_models_data(str(tmp_path / "missing.yaml"))
    with pytest.raises(InvalidConfig):
        load_models_data(document={"trainer": {}})
    with pytest.raises(InvalidConfig):
        load_models_data(document={"paths": {"checkpoints": "x"}})
    with pytest.raises(InvalidConfig):
        load_models_data(document={"workers": 0})


def test_resolved_document_round_trips():
    models_data = load_models_data(document={"profile": "open-set", "train": {"n_s": 16}, "open_set_classes": 2})
    reloaded = load_models_data(document=models_data.to_dict())
    assert reloaded.train_config == models_data.train_config
    assert reloaded.open_set_classes == 2


def test_resolved_document_only_holds_settings_that_are_used():
    models_data = load_models_data(document={"profile": "open-set"})
    assert set(models_data.to_dict()) == {"profile", "pairing", "workers", "open_set_classes", "train", "paths", "synth"}
    with pytest.raises(InvalidConfig):
        load_models_data(document={"device": "cuda"})
