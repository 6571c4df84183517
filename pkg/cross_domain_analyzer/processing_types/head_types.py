"""
Module to create prediction head types.
"""

from enum import Enum

class Heads(Enum):
    MAIN = "main"
    AUX = "aux"

    @property
    def other(self) -> "Heads":
        """
        The head paired with this one.
        """
        return Heads.AUX if self is Heads.MAIN else Heads.MAIN
