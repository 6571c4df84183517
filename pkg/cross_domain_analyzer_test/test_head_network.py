import math

import pytest
import torch

from cross_domain_analyzer.errors import DimensionMismatch, NonScalarLoss, OddDimension
from cross_domain_analyzer.models.head_network import (
    PENULTIMATE_WIDTH, PredictionHead, gradient, positional_encoding
)


def test_positional_encoding_values():
    encoding = positional_encoding(4, 8, dtype=torch.float64)
    assert encoding[0, 0].item() == 0.0
    assert encoding[0, 1].item() == 1.0
    assert encoding[1, 0].item() == pytest.approx(0.841471, abs=1e-6)
    assert encoding[1, 2].item() == pytest.approx(math.sin(1 / 10000 ** (2 / 8)), abs=1e-12)


def test_positional_encoding_rejects_odd_width():
    with pytest.raises(OddDimension):
        positional_encoding(4, 7)


def test_scores_lie_in_unit_interval_and_penultimate_is_nonnegative():
    head = PredictionHead(8, seed=0)
    features = 10 * torch.randn(3, 16, 8, generator=torch.Generator().manual_seed(1))
    output = head(features)
    assert output.scores.shape == (3, 16)
    assert output.penultimate.shape == (3, 16, PENULTIMATE_WIDTH)
    assert torch.all((output.scores >= 0) & (output.scores <= 1))
    assert torch.all(output.penultimate >= 0)


def test_zero_final_layer_scores_one_half():
    head = PredictionHead(8, seed=0)
    with torch.no_grad():
        head.classifier[-1].weight.zero_()
        head.classifier[-1].bias.zero_()
    scores = head(torch.randn(16, 8)).scores
    assert torch.all(scores == 0.5)


def test_same_seed_gives_identical_outputs():
    features = torch.randn(16, 8, generator=torch.Generator().manual_seed(2))
    first = PredictionHead(8, seed=5)
    second = PredictionHead(8, seed=5)
    assert torch.equal(first(features).scores, second(features).scores)
    assert torch.equal(first(features).penultimate, first(features).penultimate)
    assert not torch.equal(first(features).scores, PredictionHead(8, seed=6)(features).scores)


def test_initialization_bounds_and_zero_biases():
    head = PredictionHead(8, seed=0)
    for layer in head.classifier:
        assert torch.all(layer.weight.abs() <= 1 / math.sqrt(layer.in_features))
        assert torch.all(layer.bias == 0)
    assert torch.all(head.encoder.self_attn.in_proj_bias == 0)


def test_parameter_groups_cover_every_parameter():
    head = PredictionHead(8, seed=0)
    grouped = {id(p) for p in head.encoder_parameters()} | {id(p) for p in head.classifier_parameters()}
    assert grouped == {id(p) for p in head.parameters()}


def test_width_mismatch_raises():
    with pytest.raises(DimensionMismatch):
        PredictionHead(8, seed=0)(torch.randn(16, 12))


def test_segments_are_permutation_equivariant_without_positional_encoding():
    head = PredictionHead(8, use_positional_encoding=False, seed=0).double()
    features = torch.randn(6, 8, dtype=torch.float64, generator=torch.Generator().manual_seed(4))
    order = torch.tensor([3, 0, 5, 1, 4, 2])
    torch.testing.assert_close(head(features[order]).scores, head(features).scores[order])


def test_constant_loss_has_zero_gradients():
    head = PredictionHead(8, seed=0)
    grads = gradient(head, lambda: torch.tensor(3.0))
    assert set(grads) == {name for name, _ in head.named_parameters()}
    assert all(torch.all(value == 0) for value in grads.values())


def test_non_scalar_loss_raises():
    head = PredictionHead(8, seed=0)
    features = torch.randn(4, 8)
    with pytest.raises(NonScalarLoss):
        gradient(head, lambda: head(features).scores)


def test_classifier_bias_gradient_of_score_sum():
    head = PredictionHead(8, seed=0).double()
    for parameter in head.encoder_parameters():
        parameter.requires_grad_(False)
    features = torch.randn(4, 8, dtype=torch.float64, generator=torch.Generator().manual_seed(7))
    grads = gradient(head, lambda: head(features).scores.sum())
    scores = head(features).scores.detach()
    expected = (scores * (1 - scores)).sum()
    assert grads["classifier.3.bias"].item() == pytest.approx(expected.item(), rel=1e-12)
    assert "encoder.self_attn.in_proj_weight" not in grads
