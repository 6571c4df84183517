"""
Module to initialize utilities.
"""

from cross_domain_analyzer.utilities.utilities_results import *
