"""
Versioned checkpoint container holding both heads, optimizer moments, pseudo-labels,
the CDL step index, the RNG state and the training configuration.
"""

import json
import logging
import os
import re
from typing import Iterable, List, Optional, Tuple

import numpy as np
import torch

from cross_domain_analyzer.data.video_data import PseudoLabelSet
from cross_domain_analyzer.errors import MissingLogs
from cross_domain_analyzer.logger import logger
from cross_domain_analyzer.models.adam import AdamMoments
from cross_domain_analyzer.models.head_network import LAYER_NORM_PLACEMENT, PredictionHead
from cross_domain_analyzer.models.train_config import TrainConfig
from cross_domain_analyzer.processing_types import Heads

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "cdl-checkpoint"
CHECKPOINT_VERSION = 1
CHECKPOINT_PATTERN = re.compile(r"checkpoint_step(\d+)\.pt$")


def checkpoint_name(cdl_step: int) -> str:
    return f"checkpoint_step{cdl_step:03d}.pt"


def list_checkpoints(run_dir: str) -> List[Tuple[int, str]]:
    """
    (CDL step, path) of every checkpoint in a run directory, ordered by step.
    """
    if not os.path.isdir(run_dir):
        raise MissingLogs(f"Run directory {run_dir} does not exist.")
    found = []
    for name in os.listdir(run_dir):
        match = CHECKPOINT_PATTERN.match(name)
        if match:
            found.append((int(match.group(1)), os.path.join(run_dir, name)))
    return sorted(found)


def save_checkpoint(state, config: TrainConfig, path: str):
    """
    Writes a ``TrainState`` and its configuration to ``path``.
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layer_norm": LAYER_NORM_PLACEMENT,
        "config": config.to_dict(),
        "cdl_step": state.cdl_step,
        "epoch_in_step": state.epoch_in_step,
        "global_step": state.global_step,
        "rng_state": json.dumps(state.rng.bit_generator.state),
        "heads": {
            head.value: {
                "input_dim": module.input_dim,
                "use_positional_encoding": module.use_positional_encoding,
                "state_dict": {name: value.detach().clone() for name, value in module.state_dict().items()},
            }
            for head, module in state.heads.items()
        },
        "moments": {head.value: moments.state_dict() for head, moments in state.moments.items()},
        "pseudo_labels": {
            head.value: {
                "cdl_step": labels.cdl_step,
                "source_heads": [source.value for source in labels.source_heads],
                "video_ids": list(labels.labels),
                "values": torch.stack([torch.from_numpy(np.asarray(v)) for v in labels.labels.values()])
                if len(labels) else torch.zeros(0),
            }
            for head, labels in state.pseudo_labels.items()
        },
    }
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    torch.save(payload, path)
    logger.info("Saved checkpoint for CDL step %d to %s.", state.cdl_step, path)


def load_checkpoint(path: str, heads: Optional[Iterable[Heads]] = None):
    """
    Restores a ``TrainState`` and its configuration.

    Parameters
    ----------
    path : str
        Checkpoint file.
    heads : iterable of Heads, optional
        Heads to rebuild; all stored heads when omitted. Inference restores the main head only.

    Returns
    -------
    tuple
        ``(TrainState, TrainConfig)``.
    """
    from cross_domain_analyzer.models.cdl_trainer import TrainState

    if not os.path.exists(path):
        raise MissingLogs(f"Checkpoint {path} does not exist.")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("format") != CHECKPOINT_FORMAT or payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path} is not a version {CHECKPOINT_VERSION} CDL checkpoint.")

    config = TrainConfig.from_dict(payload["config"])
    wanted = set(heads) if heads is not None else {Heads(name) for name in payload["heads"]}

    restored = {}
    for name, entry in payload["heads"].items():
        head = Heads(name)
        if head not in wanted:
            continue
        module = PredictionHead(entry["input_dim"], use_positional_encoding=entry["use_positional_encoding"])
        module.load_state_dict(entry["state_dict"])
        restored[head] = module

    moments = {
        Heads(name): AdamMoments.from_state_dict(entry)
        for name, entry in payload["moments"].items() if Heads(name) in wanted
    }
    pseudo_labels = {}
    for name, entry in payload["pseudo_labels"].items():
        values = entry["values"].numpy()
        pseudo_labels[Heads(name)] = PseudoLabelSet(
            head_id=Heads(name),
            cdl_step=int(entry["cdl_step"]),
            labels={video_id: values[i].copy() for i, video_id in enumerate(entry["video_ids"])},
            source_heads=tuple(Heads(source) for source in entry["source_heads"]),
        )

    rng = np.random.default_rng()
    rng.bit_generator.state = json.loads(payload["rng_state"])
    state = TrainState(
        heads=restored,
        moments=moments,
        pseudo_labels=pseudo_labels,
        cdl_step=int(payload["cdl_step"]),
        epoch_in_step=int(payload["epoch_in_step"]),
        global_step=int(payload["global_step"]),
        rng=rng,
    )
    logger.info("Loaded checkpoint %s (CDL step %d, heads %s).", path, state.cdl_step, sorted(h.value for h in restored))
    return state, config
