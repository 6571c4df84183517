"""
Training hyper-parameters and the named profiles that seed them.
"""

from dataclasses import asdict, dataclass, fields, replace
from typing import Mapping, Optional

from cross_domain_analyzer.errors import InvalidConfig
from cross_domain_analyzer.processing_types import Pairings, Profiles, PseudoLabelModes


@dataclass(frozen=True)
class TrainConfig:
    """
    Every hyper-parameter of a training run.

    Attributes
    ----------
    n_s : int
        Segments per video.
    tau : float
        Temperature of the surrogate variance.
    lambda1, lambda2 : float
        Temporal smoothness and sparsity weights of the ranking loss.
    lambda3 : float
        Weight of the cosine similarity term of the external loss.
    lambda4 : float
        Weight of the external loss in the total objective.
    lr_encoder, lr_fc : float
        Learning rates of the temporal encoder and of the classifier layers.
    weight_decay : float
        L2 penalty added to the gradient.
    batch_size : int
        Videos per mini-batch, divisible by 4.
    epochs_step0 : int
        Epochs of labeled-only training.
    cdl_steps : int
        Number of CDL steps (k).
    epochs_per_step : int
        Epochs inside every CDL step.
    seed : int
        Single source of randomness.
    use_uncertainty : bool
        When false the external loss weights every segment by 1.
    pseudo_label_mode : str
        Which head's predictions supervise which head: self, cross or averaged.
    max_external_videos : int or None
        Cap on the number of external videos used.
    """
    n_s: int = 64
    tau: float = 1.25
    lambda1: float = 5e-4
    lambda2: float = 5e-4
    lambda3: float = 1e-3
    lambda4: float = 700.0
    lr_encoder: float = 3e-5
    lr_fc: float = 5e-4
    weight_decay: float = 1e-3
    batch_size: int = 64
    epochs_step0: int = 200
    cdl_steps: int = 40
    epochs_per_step: int = 4
    seed: int = 0
    use_uncertainty: bool = True
    pseudo_label_mode: str = PseudoLabelModes.SELF.value
    max_external_videos: Optional[int] = None
    main_stream: str = "main"
    aux_stream: str = "aux"

    def __post_init__(self):
        if self.n_s < 2:
            raise InvalidConfig(f"n_s must be at least 2, got {self.n_s}.")
        if self.tau <= 0:
            raise InvalidConfig(f"tau must be positive, got {self.tau}.")
        for name in ("lambda1", "lambda2", "lambda3", "lambda4", "weight_decay"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be non-negative.")
        if self.lr_encoder <= 0 or self.lr_fc <= 0:
            raise InvalidConfig("Learning rates must be positive.")
        if self.batch_size <= 0 or self.batch_size % 4 != 0:
            raise InvalidConfig(f"batch_size must be a positive multiple of 4, got {self.batch_size}.")
        for name in ("epochs_step0", "cdl_steps", "epochs_per_step"):
            if getattr(self, name) < 0:
                raise InvalidConfig(f"{name} must be non-negative.")
        if self.pseudo_label_mode not in {mode.value for mode in PseudoLabelModes}:
            raise InvalidConfig(f"Unknown pseudo-label mode {self.pseudo_label_mode}.")
        if self.max_external_videos is not None and self.max_external_videos < 1:
            raise InvalidConfig("max_external_videos must be positive when set.")

    @property
    def pairs_per_batch(self) -> int:
        return self.batch_size // 4

    @property
    def external_per_batch(self) -> int:
        return self.batch_size // 2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Mapping) -> "TrainConfig":
        """
        Builds a config from a mapping; unknown keys are rejected.
        """
        known = {item.name for item in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise InvalidConfig(f"Unknown training keys: {sorted(unknown)}.")
        return cls(**dict(values))


PROFILE_DEFAULTS = {
    Profiles.OPEN_SET: {
        "lambda1": 5e-4,
        "lambda2": 5e-4,
        "lambda3": 1e-3,
        "lambda4": 700.0,
        "lr_encoder": 3e-5,
        "lr_fc": 5e-4,
        "batch_size": 64,
    },
    Profiles.CROSS_DOMAIN: {
        "lambda1": 5e-3,
        "lambda2": 1e-3,
        "lambda3": 1e-3,
        "lambda4": 2000.0,
        "lr_encoder": 3e-5,
        "lr_fc": 5e-4,
        "batch_size": 64,
    },
}

PAIRING_PRESETS = {
    Pairings.UCF_HACS: {"lambda4": 2000.0, "lr_encoder": 3e-5, "lr_fc": 5e-4, "batch_size": 64},
    Pairings.UCF_XDV: {"lambda4": 2000.0, "lr_encoder": 3e-5, "lr_fc": 5e-4, "batch_size": 64},
    Pairings.XDV_HACS: {"lambda4": 1250.0, "lr_encoder": 5e-5, "lr_fc": 1e-4, "batch_size": 32},
    Pairings.XDV_UCF: {"lambda4": 700.0, "lr_encoder": 5e-5, "lr_fc": 1e-4, "batch_size": 32},
}


def resolve_train_config(
        profile: str = Profiles.OPEN_SET.value,
        pairing: Optional[str] = None,
        overrides: Optional[Mapping] = None
) -> TrainConfig:
    """
    Resolves profile defaults, then the pairing preset, then explicit overrides.

    Parameters
    ----------
    profile : str
        ``open-set`` or ``cross-domain``.
    pairing : str, optional
        Dataset pairing preset, only meaningful with the cross-domain profile.
    overrides : Mapping, optional
        Explicit TrainConfig values.

    Returns
    -------
    TrainConfig
        Validated configuration.
    """
    try:
        profile_type = Profiles(profile)
    except ValueError as e:
        raise InvalidConfig(f"Unknown profile {profile}.") from e

    config = replace(TrainConfig(), **PROFILE_DEFAULTS[profile_type])
    if pairing:
        try:
            pairing_type = Pairings(pairing)
        except ValueError as e:
            raise InvalidConfig(f"Unknown pairing {pairing}.") from e
        if profile_type is not Profiles.CROSS_DOMAIN:
            raise InvalidConfig("Pairing presets belong to the cross-domain profile.")
        config = replace(config, **PAIRING_PRESETS[pairing_type])
    if overrides:
        values = config.to_dict()
        values.update(overrides)
        config = TrainConfig.from_dict(values)
    return config
