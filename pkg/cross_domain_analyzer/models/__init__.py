"""
Module to initialize models directory.
"""

from cross_domain_analyzer.models.train_config import TrainConfig, resolve_train_config
from cross_domain_analyzer.models.head_network import PredictionHead, gradient, positional_encoding
from cross_domain_analyzer.models.adam import AdamMoments, adam_update
