"""
Structured training log: one JSON object per line.
"""

import json
import logging
import os
from typing import Iterator, List, Optional

from cross_domain_analyzer.errors import MissingLogs
from cross_domain_analyzer.logger import logger

logger = logging.getLogger(__name__)

TRAIN_LOG_NAME = "train_log.jsonl"


class TrainingLog:
    """
    Collects training events in memory and, when a path is given, appends them to a
    JSON-lines file.

    Attributes
    ----------
    path : str or None
        Target file.
    records : list of dict
        Every event written through this instance.
    """
    def __init__(self, path: Optional[str] = None, truncate: bool = False):
        self.path = path
        self.records: List[dict] = []
        if path:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
            if truncate and os.path.exists(path):
                os.remove(path)

    def write(self, event: str, **fields):
        """
        Appends one event.
        """
        record = {"event": event, **fields}
        self.records.append(record)
        if self.path:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, sort_keys=True) + "\n")

    def events(self, event: str) -> List[dict]:
        return [record for record in self.records if record["event"] == event]


def read_training_log(path: str) -> Iterator[dict]:
    """
    Yields the events of a JSON-lines training log.
    """
    if not os.path.exists(path):
        raise MissingLogs(f"Training log {path} does not exist.")
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)


def rewind_training_log(path: str, cdl_step: int) -> TrainingLog:
    """
    Drops every event recorded after the checkpoint of ``cdl_step`` and reopens the log
    for appending, so a resumed run continues from the exact checkpoint boundary.

    Parameters
    ----------
    path : str
        JSON-lines log of the interrupted run.
    cdl_step : int
        Step of the checkpoint being resumed.

    Returns
    -------
    TrainingLog
        Log holding the kept events.
    """
    kept = []
    for record in read_training_log(path):
        kept.append(record)
        if record["event"] == "checkpoint" and record.get("cdl_step") == cdl_step:
            break
    else:
        raise MissingLogs(f"{path} has no checkpoint event for CDL step {cdl_step}.")

    training_log = TrainingLog(path, truncate=True)
    for record in kept:
        fields = dict(record)
        training_log.write(fields.pop("event"), **fields)
    logger.info("Rewound %s to CDL step %d (%d events kept).", path, cdl_step, len(kept))
    return training_log
