"""
Module to create pseudo-label assignment types.
"""

from enum import Enum

class PseudoLabelModes(Enum):
    SELF = "self"
    CROSS = "cross"
    AVERAGED = "averaged"
