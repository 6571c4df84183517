"""
Module to initialize processing_types.
"""

from cross_domain_analyzer.processing_types.head_types import Heads
from cross_domain_analyzer.processing_types.profile_types import Profiles, Pairings
from cross_domain_analyzer.processing_types.pseudo_label_types import PseudoLabelModes
from cross_domain_analyzer.processing_types.run_types import Runs
