"""Attribute-disentangled VAE: disentangled latents, sketch-conditioned synthesis.

Subpackages follow the processing pipeline: distributions (Gaussian math),
data (toy faces + line-drawing simulation), networks (encoder/decoder/sketch
channel), objective (the variational losses), training, evaluation, cli,
service.
"""

from advae.distributions import DiagonalGaussian, kl_divergence, log_density, sample

__all__ = ["DiagonalGaussian", "kl_divergence", "log_density", "sample"]

__version__ = "0.1.0"
