"""
Shared fixtures: tiny synthetic corpora and a fast training configuration.
"""

import os
import tempfile
from dataclasses import replace

os.environ.setdefault("CDL_LOG_FILE", os.path.join(tempfile.gettempdir(), "cross_domain_analyzer_test.log"))

import pytest

from cross_domain_analyzer.data import FeatureStore, SynthSpec, generate, load_manifest
from cross_domain_analyzer.models.train_config import resolve_train_config

TINY_WINDOWS = {
    "fighting": (6, 14),
    "explosion": (6, 14),
    "theft": (6, 14),
    "accident": (6, 14),
}

TINY_SPEC = SynthSpec(
    n_labeled=16,
    n_external=16,
    n_test_source=6,
    n_test_target=8,
    frames_range=(24, 64),
    class_windows=TINY_WINDOWS,
    dim_main=8,
    dim_aux=8,
    clip_length=4,
    seed=0,
)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow directional tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long directional reproduction on synthetic corpora")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def tiny_spec():
    return TINY_SPEC


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """
    Split name to manifest path of a generated tiny corpus.
    """
    return generate(TINY_SPEC, str(tmp_path_factory.mktemp("tiny_corpus")))


@pytest.fixture(scope="session")
def labeled(tiny_corpus):
    return load_manifest(tiny_corpus["labeled"])


@pytest.fixture(scope="session")
def external(tiny_corpus):
    return load_manifest(tiny_corpus["external"])


@pytest.fixture(scope="session")
def test_target(tiny_corpus):
    return load_manifest(tiny_corpus["test_target"])


@pytest.fixture
def tiny_config():
    return resolve_train_config("open-set", overrides={
        "n_s": 8,
        "batch_size": 8,
        "epochs_step0": 2,
        "cdl_steps": 3,
        "epochs_per_step": 4,
        "seed": 0,
    })


@pytest.fixture
def feature_store():
    return FeatureStore()


@pytest.fixture
def step0_only(tiny_config):
    return replace(tiny_config, cdl_steps=0)
