"""
Getter and Setter class for storing the resolved run configuration.
"""

import os
from dataclasses import replace
from typing import Mapping, Optional

import yaml

from cross_domain_analyzer.data.synthetic_corpus_generator import SynthSpec
from cross_domain_analyzer.errors import InvalidConfig
from cross_domain_analyzer.models.train_config import TrainConfig, resolve_train_config
from cross_domain_analyzer.processing_types import Profiles

PATH_KEYS = ("labeled_manifest", "external_manifest", "test_manifest", "corpus_manifest", "output_dir")
TOP_LEVEL_KEYS = {"profile", "pairing", "train", "paths", "synth", "workers", "open_set_classes"}


class ModelsData:
    """
    Getter and setter class for storing inputs of every command.
    """
    def __init__(self):
        """
        Initializes the run configuration with the open-set profile defaults.
        """
        self._profile = Profiles.OPEN_SET.value
        self._pairing = None
        self._train_config = resolve_train_config(self._profile)
        self._labeled_manifest = ""
        self._external_manifest = ""
        self._test_manifest = ""
        self._corpus_manifest = ""
        self._open_set_classes = None
        self._output_dir = "artifacts"
        self._checkpoint_path = ""
        self._resume_path = ""
        self._run_dir = ""
        self._synth_spec = SynthSpec()
        self._workers = 1
        self._processing_type = ""


    @property
    def profile(self):
        """
        Gets the hyper-parameter profile name.

        Returns:
            str: ``open-set`` or ``cross-domain``.
        """
        return self._profile

    @profile.setter
    def profile(self, value):
        """
        Sets the hyper-parameter profile name.

        Args:
            value (str): ``open-set`` or ``cross-domain``.
        """
        self._profile = value


    @property
    def pairing(self):
        """
        Gets the dataset pairing preset, or None.
        """
        return self._pairing

    @pairing.setter
    def pairing(self, value):
        self._pairing = value


    @property
    def train_config(self):
        """
        Gets the training hyper-parameters.

        Returns:
            TrainConfig: The resolved configuration.
        """
        return self._train_config

    @train_config.setter
    def train_config(self, value):
        """
        Sets the training hyper-parameters.

        Args:
            value (TrainConfig): The resolved configuration.
        """
        if not isinstance(value, TrainConfig):
            raise InvalidConfig("train_config must be a TrainConfig.")
        self._train_config = value


    @property
    def labeled_manifest(self):
        """
        Gets the weakly-labeled corpus manifest path.
        """
        return self._labeled_manifest

    @labeled_manifest.setter
    def labeled_manifest(self, value):
        self._labeled_manifest = value


    @property
    def external_manifest(self):
        """
        Gets the external corpus manifest path.
        """
        return self._external_manifest

    @external_manifest.setter
    def external_manifest(self, value):
        self._external_manifest = value


    @property
    def test_manifest(self):
        """
        Gets the frame-labeled test corpus manifest path.
        """
        return self._test_manifest

    @test_manifest.setter
    def test_manifest(self, value):
        self._test_manifest = value


    @property
    def corpus_manifest(self):
        """
        Gets the manifest split by class for open-set runs.
        """
        return self._corpus_manifest

    @corpus_manifest.setter
    def corpus_manifest(self, value):
        self._corpus_manifest = value


    @property
    def open_set_classes(self):
        """
        Gets the number of labeled anomaly classes of an open-set run, or None.
        """
        return self._open_set_classes

    @open_set_classes.setter
    def open_set_classes(self, value):
        self._open_set_classes = None if value is None else int(value)


    @property
    def output_dir(self):
        """
        Gets the output directory.
        """
        return self._output_dir

    @output_dir.setter
    def output_dir(self, value):
        self._output_dir = value


    @property
    def checkpoint_path(self):
        """
        Gets the checkpoint used by eval and pseudo-label.
        """
        return self._checkpoint_path

    @checkpoint_path.setter
    def checkpoint_path(self, value):
        self._checkpoint_path = value


    @property
    def resume_path(self):
        """
        Gets the checkpoint a training run resumes from.
        """
        return self._resume_path

    @resume_path.setter
    def resume_path(self, value):
        self._resume_path = value


    @property
    def run_dir(self):
        """
        Gets the training run directory inspected by diagnose.
        """
        return self._run_dir

    @run_dir.setter
    def run_dir(self, value):
        self._run_dir = value


    @property
    def synth_spec(self):
        """
        Gets the synthetic corpus specification.

        Returns:
            SynthSpec: The specification used by the synth command.
        """
        return self._synth_spec

    @synth_spec.setter
    def synth_spec(self, value):
        self._synth_spec = value


    @property
    def workers(self):
        """
        Gets the number of feature loading workers.
        """
        return self._workers

    @workers.setter
    def workers(self, value):
        value = int(value)
        if value < 1:
            raise InvalidConfig("workers must be at least 1.")
        self._workers = value


    @property
    def processing_type(self):
        """
        Gets the name of the command being processed.
        """
        return self._processing_type

    @processing_type.setter
    def processing_type(self, value):
        self._processing_type = value


    def to_dict(self) -> dict:
        """
        Fully resolved configuration, in the layout of the config file.
        """
        return {
            "profile": self.profile,
            "pairing": self.pairing,
            "workers": self.workers,
            "open_set_classes": self.open_set_classes,
            "train": self.train_config.to_dict(),
            "paths": {
                "labeled_manifest": self.labeled_manifest,
                "external_manifest": self.external_manifest,
                "test_manifest": self.test_manifest,
                "corpus_manifest": self.corpus_manifest,
                "output_dir": self.output_dir,
            },
            "synth": self.synth_spec.to_dict(),
        }


def _resolve_path(base_dir: str, path: str) -> str:
    if not path or os.path.isabs(path):
        return path
    return os.path.normpath(os.path.join(base_dir, path))


def load_models_data(
        config_path: Optional[str] = None,
        profile: Optional[str] = None,
        seed: Optional[int] = None,
        workers: Optional[int] = None,
        output_dir: Optional[str] = None,
        document: Optional[Mapping] = None
) -> ModelsData:
    """
    Resolves profile defaults, pairing preset, config file and command-line overrides.

    Parameters
    ----------
    config_path : str, optional
        YAML run configuration; relative paths inside it resolve against its directory.
    profile, seed, workers, output_dir : optional
        Command-line overrides.
    document : Mapping, optional
        Already parsed configuration, used instead of ``config_path``.

    Returns
    -------
    ModelsData
        The resolved configuration.
    """
    base_dir = os.getcwd()
    if document is None and config_path:
        if not os.path.exists(config_path):
            raise FileNotFoundError(f"Config file {config_path} does not exist.")
        with open(config_path, "r", encoding="utf-8") as handle:
            document = yaml.safe_load(handle) or {}
        base_dir = os.path.dirname(os.path.abspath(config_path))
    document = dict(document or {})
    unknown = set(document) - TOP_LEVEL_KEYS
    if unknown:
        raise InvalidConfig(f"Unknown config keys: {sorted(unknown)}.")

    models_data = ModelsData()
    models_data.profile = profile or document.get("profile", Profiles.OPEN_SET.value)
    models_data.pairing = document.get("pairing")
    train_overrides = dict(document.get("train") or {})
    if seed is not None:
        train_overrides["seed"] = int(seed)
    models_data.train_config = resolve_train_config(models_data.profile, models_data.pairing, train_overrides)

    paths = dict(document.get("paths") or {})
    unknown = set(paths) - set(PATH_KEYS)
    if unknown:
        raise InvalidConfig(f"Unknown path keys: {sorted(unknown)}.")
    for key in PATH_KEYS:
        if key in paths:
            setattr(models_data, key, _resolve_path(base_dir, paths[key]))
    if output_dir:
        models_data.output_dir = output_dir

    if document.get("synth"):
        models_data.synth_spec = SynthSpec.from_dict(document["synth"])
    if seed is not None:
        models_data.synth_spec = replace(models_data.synth_spec, seed=int(seed))
    models_data.open_set_classes = document.get("open_set_classes")
    models_data.workers = workers if workers is not None else document.get("workers", 1)
    return models_data
