"""
Functional Adam with L2 weight decay added to the gradient.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple, Union

import torch

from cross_domain_analyzer.errors import ShapeMismatch

BETAS = (0.9, 0.999)
EPSILON = 1e-8


@dataclass
class AdamMoments:
    """
    First and second moment estimates plus the step counter of one parameter set.
    """
    step: int = 0
    exp_avg: Dict[str, torch.Tensor] = field(default_factory=dict)
    exp_avg_sq: Dict[str, torch.Tensor] = field(default_factory=dict)

    def state_dict(self) -> dict:
        return {
            "step": self.step,
            "exp_avg": {name: value.clone() for name, value in self.exp_avg.items()},
            "exp_avg_sq": {name: value.clone() for name, value in self.exp_avg_sq.items()},
        }

    @classmethod
    def from_state_dict(cls, state: Mapping) -> "AdamMoments":
        return cls(
            step=int(state["step"]),
            exp_avg={name: value.clone() for name, value in state["exp_avg"].items()},
            exp_avg_sq={name: value.clone() for name, value in state["exp_avg_sq"].items()},
        )


def adam_update(
        params: Mapping[str, torch.Tensor],
        grads: Mapping[str, torch.Tensor],
        moments: AdamMoments,
        lr: Union[float, Mapping[str, float]],
        weight_decay: float = 0.0
) -> Tuple[Dict[str, torch.Tensor], AdamMoments]:
    """
    One Adam step with ``beta = (0.9, 0.999)``, ``eps = 1e-8`` and bias correction.
    The decay term ``weight_decay * p`` is added to the gradient before the moment update.

    Parameters
    ----------
    params : Mapping[str, torch.Tensor]
        Current parameter values.
    grads : Mapping[str, torch.Tensor]
        Gradients, same names and shapes.
    moments : AdamMoments
        State before the step; not modified.
    lr : float or Mapping[str, float]
        Learning rate, or one rate per parameter name.
    weight_decay : float
        L2 coefficient.

    Returns
    -------
    tuple
        Updated parameters and moments.
    """
    beta1, beta2 = BETAS
    step = moments.step + 1
    new_params, exp_avg, exp_avg_sq = {}, {}, {}

    for name, value in params.items():
        grad = grads[name]
        if grad.shape != value.shape:
            raise ShapeMismatch(f"Gradient of {name} has shape {tuple(grad.shape)}, parameter {tuple(value.shape)}.")
        value = value.detach()
        grad = grad.detach()
        if weight_decay:
            grad = grad + weight_decay * value

        first = moments.exp_avg.get(name, torch.zeros_like(value))
        second = moments.exp_avg_sq.get(name, torch.zeros_like(value))
        first = beta1 * first + (1.0 - beta1) * grad
        second = beta2 * second + (1.0 - beta2) * grad * grad
        first_hat = first / (1.0 - beta1 ** step)
        second_hat = second / (1.0 - beta2 ** step)

        rate = lr[name] if isinstance(lr, Mapping) else lr
        new_params[name] = value - rate * first_hat / (torch.sqrt(second_hat) + EPSILON)
        exp_avg[name] = first
        exp_avg_sq[name] = second

    return new_params, AdamMoments(step=step, exp_avg=exp_avg, exp_avg_sq=exp_avg_sq)
