"""Diagonal Gaussian distributions: closed-form KL, reparameterized sampling,
log-density.

Works on both numpy arrays and torch tensors so the same formulas serve
value-level code (data/evaluation) and differentiable losses (objective).
All operations are pure functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

_LOG_2PI = math.log(2.0 * math.pi)


def _log(x):
    return torch.log(x) if torch.is_tensor(x) else np.log(x)


def _as_len(v) -> int:
    return int(v.shape[-1]) if hasattr(v, "shape") else len(v)


@dataclass(frozen=True)
class DiagonalGaussian:
    """Gaussian with diagonal covariance, parameterized by mean and std.

    std is the canonical scale parameter at this boundary; callers that
    predict log-variance must convert before constructing the type.
    """

    mean: object
    std: object

    def __post_init__(self):
        if _as_len(self.mean) != _as_len(self.std):
            raise ValueError(
                f"mean and std lengths differ: {_as_len(self.mean)} vs {_as_len(self.std)}"
            )
        std = self.std
        bad = (std <= 0).any() if hasattr(std, "any") else any(s <= 0 for s in std)
        if bool(bad):
            raise ValueError("std must be strictly positive")

    @property
    def dim(self) -> int:
        return _as_len(self.mean)


def _check_dims(a: int, b: int, what: str):
    if a != b:
        raise ValueError(f"{what}: dimension mismatch ({a} vs {b})")


def kl_terms(q: DiagonalGaussian, p: DiagonalGaussian):
    """Per-dimension KL contributions (no reduction); each term is >= 0.

    Useful for batched tensors and per-attribute breakdowns.
    """
    _check_dims(q.dim, p.dim, "kl_divergence")
    var_ratio = (q.std / p.std) ** 2
    mean_term = ((q.mean - p.mean) / p.std) ** 2
    return (var_ratio + mean_term - 1.0 - _log(var_ratio)) * 0.5


def kl_divergence(q: DiagonalGaussian, p: DiagonalGaussian):
    """KL(q || p) for two diagonal Gaussians, summed over dimensions.

    Closed form: sum_i ln(p_std/q_std) + (q_std^2 + (q_mean - p_mean)^2) / (2 p_std^2) - 1/2.
    Always >= 0.
    """
    return kl_terms(q, p).sum()


def sample(d: DiagonalGaussian, noise):
    """Reparameterized draw: mean + std * noise, with noise ~ N(0, I) supplied
    by the caller so all randomness is external and seedable."""
    _check_dims(d.dim, _as_len(noise), "sample")
    return d.mean + d.std * noise


def log_density(d: DiagonalGaussian, x):
    """Exact log-density of x under d, summed over dimensions."""
    _check_dims(d.dim, _as_len(x), "log_density")
    z = (x - d.mean) / d.std
    return (-0.5 * (z**2 + _LOG_2PI) - _log(d.std)).sum()
