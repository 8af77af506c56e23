"""The variational lower bounds as minimizable losses.

Four objectives share one reduction convention: reconstruction negative
log-likelihood summed over pixels, KL summed over latent dimensions, both
averaged over the batch. The expectation term uses a single reparameterized
sample whose unit-Gaussian noise is passed in explicitly, so every loss is
a pure deterministic function of (model, batch, noise).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import torch

from advae.distributions import DiagonalGaussian, kl_terms
from advae.networks import AdVaeModel


@dataclass(frozen=True)
class ObjectiveConfig:
    """Per-attribute KL weights, style-KL weight, and attribute-prior std.

    Attribute labels are always in {-1, +1}: the sign classifier reads the
    sign of the posterior mean, which needs class prior means of opposite
    sign.
    """

    alpha: tuple = (10.0, 10.0, 10.0, 10.0)
    beta: float = 1.0
    sigma: float = 0.25

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if any(a <= 0 for a in self.alpha) or self.beta <= 0 or self.sigma <= 0:
            raise ValueError("alpha, beta, sigma must all be positive")
        if min(self.alpha) <= self.beta:
            warnings.warn(
                "min(alpha) <= beta: attribute KL terms are weighted no harder "
                "than the style KL, which weakens disentanglement",
                stacklevel=2,
            )

    def to_dict(self):
        return {"alpha": list(self.alpha), "beta": self.beta, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["alpha"]), float(d["beta"]), float(d["sigma"]))


@dataclass(frozen=True)
class LossBreakdown:
    """total = sum_i alpha[i] * attr_kl[i] + beta * style_kl + recon_nll,
    recomposed exactly from the parts at construction time."""

    total: object
    attr_kl: object  # length-L vector (unweighted per-attribute KL)
    style_kl: object
    recon_nll: object

    def detach(self) -> "LossBreakdown":
        def f(v):
            return float(v.detach()) if torch.is_tensor(v) else float(v)

        attr = self.attr_kl.detach().numpy().copy() if torch.is_tensor(self.attr_kl) else np.asarray(self.attr_kl, dtype=np.float64)
        return LossBreakdown(f(self.total), attr, f(self.style_kl), f(self.recon_nll))


def attribute_prior(y_i: int, sigma: float) -> DiagonalGaussian:
    """Prior over one attribute variable: N(label, sigma), label in {-1,+1}."""
    if y_i not in (-1, 1):
        raise ValueError(f"attribute label must be -1 or +1, got {y_i!r}")
    return DiagonalGaussian(np.array([float(y_i)]), np.array([float(sigma)]))


def _recon_nll(model: AdVaeModel, params: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    """Per-image reconstruction NLL summed over pixels, averaged over batch."""
    if model.cfg.decoder_likelihood == "bernoulli":
        ll = x * torch.log(params) + (1.0 - x) * torch.log1p(-params)
        return -ll.flatten(1).sum(dim=1).mean()
    s2 = model.cfg.gaussian_std**2
    nll = 0.5 * ((x - params) ** 2 / s2 + math.log(2.0 * math.pi * s2))
    return nll.flatten(1).sum(dim=1).mean()


def _gaussian(mean, std):
    return DiagonalGaussian(mean, std)


def _unit(mean_like, std_like):
    return DiagonalGaussian(torch.zeros_like(mean_like), torch.ones_like(std_like))


def _check_labels(y: torch.Tensor, L: int):
    if y.shape[-1] != L:
        raise ValueError(f"label vector length {y.shape[-1]} != attribute count {L}")
    if not torch.isin(y.to(torch.int64), torch.tensor([-1, 1])).all():
        raise ValueError("attribute labels must be -1 or +1")


def vae_loss(model: AdVaeModel, x: torch.Tensor, noise: torch.Tensor) -> LossBreakdown:
    """Plain VAE bound (negated): KL of the full posterior to N(0, I) plus
    reconstruction NLL with a single reparameterized sample."""
    L = model.cfg.attribute_count
    mu_y, std_y, mu_o, std_o = model.posterior(x)
    kl_y = kl_terms(_gaussian(mu_y, std_y), _unit(mu_y, std_y))
    kl_o = kl_terms(_gaussian(mu_o, std_o), _unit(mu_o, std_o))
    attr_kl = kl_y.mean(dim=0)
    style_kl = kl_o.sum(dim=1).mean()
    z_y = mu_y + std_y * noise[:, :L]
    z_o = mu_o + std_o * noise[:, L:]
    recon = _recon_nll(model, model.decode_params(torch.cat([z_y, z_o], dim=1)), x)
    total = attr_kl.sum() + style_kl + recon
    return LossBreakdown(total, attr_kl, style_kl, recon)


def advae_loss(
    model: AdVaeModel,
    x: torch.Tensor,
    y: torch.Tensor,
    cfg: ObjectiveConfig,
    noise: torch.Tensor,
) -> LossBreakdown:
    """Attribute-disentangled bound: per-attribute KL to N(y_i, sigma)
    weighted by alpha, style KL to N(0, I) weighted by beta, plus
    reconstruction NLL."""
    _check_labels(y, model.cfg.attribute_count)
    prior_means = y.to(x.dtype)
    return _advae_loss_with_priors(model, x, prior_means, cfg, noise)


def _advae_loss_with_priors(model, x, prior_means, cfg, noise, sketch=None):
    """Core of the disentangled bound with arbitrary attribute-prior means.

    Public callers go through advae_loss / advae_sketch_loss, which enforce
    the +-1 label convention; tests use this seam for degenerate priors.
    """
    L = model.cfg.attribute_count
    mu_y, std_y, mu_o, std_o = model.posterior(x)
    sigma = torch.full_like(std_y, cfg.sigma)
    kl_y = kl_terms(_gaussian(mu_y, std_y), _gaussian(prior_means, sigma))
    kl_o = kl_terms(_gaussian(mu_o, std_o), _unit(mu_o, std_o))
    attr_kl = kl_y.mean(dim=0)
    style_kl = kl_o.sum(dim=1).mean()
    z_y = mu_y + std_y * noise[:, :L]
    z_o = mu_o + std_o * noise[:, L:]
    z = torch.cat([z_y, z_o], dim=1)
    if sketch is None:
        params = model.decode_params(z)
    else:
        params = model.decode_params(z, model.sketch_features(sketch))
    recon = _recon_nll(model, params, x)
    alpha = torch.as_tensor(cfg.alpha, dtype=x.dtype)
    total = (alpha * attr_kl).sum() + cfg.beta * style_kl + recon
    return LossBreakdown(total, attr_kl, style_kl, recon)


def advae_sketch_loss(
    model: AdVaeModel,
    x: torch.Tensor,
    y: torch.Tensor,
    s: torch.Tensor,
    cfg: ObjectiveConfig,
    noise: torch.Tensor,
) -> LossBreakdown:
    """Sketch-conditioned bound: same KL terms as the unconditioned
    disentangled bound; the reconstruction term conditions the decoder on
    the sketch channel's feature maps."""
    _check_labels(y, model.cfg.attribute_count)
    return _advae_loss_with_priors(model, x, y.to(x.dtype), cfg, noise, sketch=s)


def acvae_loss(
    model: AdVaeModel,
    x: torch.Tensor,
    y: torch.Tensor,
    cfg: ObjectiveConfig,
    noise: torch.Tensor,
) -> LossBreakdown:
    """Attribute-conditioned baseline: labels condition the decoder directly,
    only the style posterior is inferred; attr_kl is reported as zeros."""
    L, K = model.cfg.attribute_count, model.cfg.style_dim
    _check_labels(y, L)
    if noise.shape[-1] == L + K:  # accept full-latent noise for convenience
        noise = noise[:, L:]
    mu_y, std_y, mu_o, std_o = model.posterior(x)
    kl_o = kl_terms(_gaussian(mu_o, std_o), _unit(mu_o, std_o))
    style_kl = kl_o.sum(dim=1).mean()
    z_o = mu_o + std_o * noise
    z = torch.cat([y.to(x.dtype), z_o], dim=1)
    recon = _recon_nll(model, model.decode_params(z), x)
    attr_kl = torch.zeros(L, dtype=x.dtype)
    total = cfg.beta * style_kl + recon
    return LossBreakdown(total, attr_kl, style_kl, recon)


LOSS_FUNCTIONS = {
    "vae": vae_loss,
    "advae": advae_loss,
    "advae_sketch": advae_sketch_loss,
    "acvae": acvae_loss,
}
