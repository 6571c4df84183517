"""
Module to create run types.
"""

from enum import Enum

class Runs(Enum):
    SYNTH = "synth"
    TRAIN = "train"
    EVAL = "eval"
    PSEUDO_LABEL = "pseudo-label"
    DIAGNOSE = "diagnose"
