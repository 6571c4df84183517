"""
Prediction heads: a one-layer temporal transformer encoder followed by a four-layer
per-segment classifier.
"""

import math
from typing import Callable, Dict, List, Optional

import torch
from torch import nn

from cross_domain_analyzer.data.video_data import HeadOutput
from cross_domain_analyzer.errors import DimensionMismatch, NonScalarLoss, OddDimension

CLASSIFIER_WIDTHS = (4096, 512, 32, 1)
PENULTIMATE_WIDTH = CLASSIFIER_WIDTHS[2]
ATTENTION_HEADS = 4
LAYER_NORM_PLACEMENT = "post"


def positional_encoding(n_s: int, d: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """
    Sinusoidal encodings, ``PE[pos, 2i] = sin(pos / 10000^(2i/d))`` and
    ``PE[pos, 2i+1] = cos(pos / 10000^(2i/d))``.

    Parameters
    ----------
    n_s : int
        Number of positions.
    d : int
        Encoding width, must be even.

    Returns
    -------
    torch.Tensor
        ``n_s x d`` matrix.
    """
    if d % 2 != 0:
        raise OddDimension(f"Positional encoding width must be even, got {d}.")
    position = torch.arange(n_s, dtype=torch.float64).unsqueeze(1)
    frequency = torch.exp(torch.arange(0, d, 2, dtype=torch.float64) * (-math.log(10000.0) / d))
    encoding = torch.zeros(n_s, d, dtype=torch.float64)
    encoding[:, 0::2] = torch.sin(position * frequency)
    encoding[:, 1::2] = torch.cos(position * frequency)
    return encoding.to(dtype)


class PredictionHead(nn.Module):
    """
    One anomaly scoring head.

    The module is never switched to evaluation mode: dropout is zero, and the fused
    inference path of ``nn.TransformerEncoderLayer`` changes numerics.

    Attributes
    ----------
    input_dim : int
        Feature width of the stream the head consumes.
    use_positional_encoding : bool
        Whether sinusoidal encodings are added before the encoder.
    """
    def __init__(self, input_dim: int, use_positional_encoding: bool = True, seed: Optional[int] = None):
        super().__init__()
        if input_dim % ATTENTION_HEADS != 0:
            raise DimensionMismatch(f"Input width {input_dim} is not divisible by {ATTENTION_HEADS} heads.")
        if use_positional_encoding and input_dim % 2 != 0:
            raise OddDimension(f"Positional encoding width must be even, got {input_dim}.")
        self.input_dim = input_dim
        self.use_positional_encoding = use_positional_encoding

        self.encoder = nn.TransformerEncoderLayer(
            d_model=input_dim,
            nhead=ATTENTION_HEADS,
            dim_feedforward=4 * input_dim,
            dropout=0.0,
            batch_first=True,
            norm_first=LAYER_NORM_PLACEMENT == "pre",
        )
        widths = (input_dim,) + CLASSIFIER_WIDTHS
        self.classifier = nn.ModuleList(
            nn.Linear(widths[i], widths[i + 1]) for i in range(len(CLASSIFIER_WIDTHS))
        )
        self.reset_parameters(seed)

    def reset_parameters(self, seed: Optional[int] = None):
        """
        Affine weights uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``, biases zero.
        """
        generator = torch.Generator()
        generator.manual_seed(0 if seed is None else int(seed))
        with torch.no_grad():
            attention = self.encoder.self_attn
            bound = 1.0 / math.sqrt(self.input_dim)
            attention.in_proj_weight.uniform_(-bound, bound, generator=generator)
            attention.in_proj_bias.zero_()
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    bound = 1.0 / math.sqrt(module.in_features)
                    module.weight.uniform_(-bound, bound, generator=generator)
                    module.bias.zero_()

    def encoder_parameters(self) -> List[nn.Parameter]:
        return list(self.encoder.parameters())

    def classifier_parameters(self) -> List[nn.Parameter]:
        return list(self.classifier.parameters())

    def forward(self, features: torch.Tensor) -> HeadOutput:
        """
        Scores every segment.

        Parameters
        ----------
        features : torch.Tensor
            ``n_s x D`` or ``B x n_s x D`` pooled features.

        Returns
        -------
        HeadOutput
            Scores in [0, 1] and the post-ReLU 32-wide representations.
        """
        if features.shape[-1] != self.input_dim:
            raise DimensionMismatch(f"Expected width {self.input_dim}, got {features.shape[-1]}.")
        unbatched = features.ndim == 2
        hidden = features.unsqueeze(0) if unbatched else features
        if self.use_positional_encoding:
            hidden = hidden + positional_encoding(hidden.shape[1], self.input_dim, dtype=hidden.dtype)
        hidden = self.encoder(hidden)
        for layer in self.classifier[:-1]:
            hidden = torch.relu(layer(hidden))
        penultimate = hidden
        scores = torch.sigmoid(self.classifier[-1](penultimate)).squeeze(-1)
        if unbatched:
            return HeadOutput(scores=scores.squeeze(0), penultimate=penultimate.squeeze(0))
        return HeadOutput(scores=scores, penultimate=penultimate)


def gradient(head: nn.Module, loss_closure: Callable[[], torch.Tensor]) -> Dict[str, torch.Tensor]:
    """
    Reverse-mode gradients of a scalar loss with respect to every parameter of ``head``.

    Parameters
    ----------
    head : nn.Module
        Module whose parameters are differentiated.
    loss_closure : callable
        Computes the loss from the current parameters.

    Returns
    -------
    dict
        Parameter name to gradient; parameters the loss does not touch get zeros.
    """
    named = [(name, parameter) for name, parameter in head.named_parameters() if parameter.requires_grad]
    loss = loss_closure()
    if not torch.is_tensor(loss):
        loss = torch.as_tensor(loss)
    if loss.numel() != 1:
        raise NonScalarLoss(f"Loss has shape {tuple(loss.shape)}, expected a scalar.")
    if not loss.requires_grad:
        return {name: torch.zeros_like(parameter) for name, parameter in named}
    grads = torch.autograd.grad(loss.reshape(()), [parameter for _, parameter in named], allow_unused=True)
    return {
        name: torch.zeros_like(parameter) if grad is None else grad
        for (name, parameter), grad in zip(named, grads)
    }
