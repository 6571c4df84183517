"""
Module to create hyper-parameter profile types.
"""

from enum import Enum

class Profiles(Enum):
    OPEN_SET = "open-set"
    CROSS_DOMAIN = "cross-domain"


class Pairings(Enum):
    UCF_HACS = "ucf+hacs"
    UCF_XDV = "ucf+xdv"
    XDV_HACS = "xdv+hacs"
    XDV_UCF = "xdv+ucf"
