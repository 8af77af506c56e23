"""Scikit-learn-style facade so the model composes with the wider ecosystem.

The estimator wraps dataset-directory-based training behind fit/transform/
predict: transform maps images to posterior-mean latents, predict returns
attribute signs, inverse_transform decodes latents back to images. Heavy
lifting stays in the training/evaluation modules; this layer is parameter
plumbing plus input validation.
"""

from __future__ import annotations

import tempfile

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from advae.data import load_dataset
from advae.networks import ModelConfig, load_checkpoint
from advae.objective import ObjectiveConfig
from advae.training import RunConfig, train


def _check_images(X, size, channels):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 3:
        X = X[None]
    if X.ndim != 4 or X.shape[1:] != (size, size, channels):
        raise ValueError(f"expected images of shape (n, {size}, {size}, {channels}), got {X.shape}")
    if X.min() < 0 or X.max() > 1:
        raise ValueError("image values must lie in [0, 1]")
    return X


class ADVAE(BaseEstimator, TransformerMixin):
    """Attribute-disentangled VAE as an estimator over a dataset directory.

    Parameters mirror the run configuration; fit(dataset_dir) trains and
    stores the final model. transform/predict operate on image arrays of
    shape (n, size, size, channels) in [0, 1].
    """

    def __init__(
        self,
        objective="advae",
        image_size=32,
        style_dim=16,
        alpha=10.0,
        beta=1.0,
        sigma=0.25,
        learning_rate=1e-3,
        batch_size=64,
        max_steps=2000,
        random_state=0,
    ):
        self.objective = objective
        self.image_size = image_size
        self.style_dim = style_dim
        self.alpha = alpha
        self.beta = beta
        self.sigma = sigma
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_steps = max_steps
        self.random_state = random_state

    def fit(self, X, y=None):
        """X is a dataset directory produced by the data module."""
        ds = load_dataset(X)
        L = len(ds.schema)
        cfg = RunConfig(
            objective=self.objective,
            model=ModelConfig(
                image_size=self.image_size,
                channels=ds.channels,
                attribute_count=L,
                style_dim=self.style_dim,
                with_sketch=self.objective == "advae_sketch",
            ),
            loss=ObjectiveConfig(alpha=(float(self.alpha),) * L, beta=self.beta, sigma=self.sigma),
            dataset=str(X),
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            max_steps=self.max_steps,
            eval_every=max(1, self.max_steps or 1),
            checkpoint_every=max(1, self.max_steps or 1),
            rng_seed=self.random_state,
        )
        with tempfile.TemporaryDirectory() as tmp:
            state = train(cfg, tmp)
        self.model_ = state.model
        self.schema_ = ds.schema
        self.n_features_in_ = self.image_size * self.image_size * ds.channels
        return self

    @classmethod
    def from_checkpoint(cls, path):
        """Wrap an already-trained checkpoint without refitting."""
        model, schema, _, _ = load_checkpoint(path)
        est = cls(image_size=model.cfg.image_size, style_dim=model.cfg.style_dim)
        est.model_ = model
        est.schema_ = schema
        est.n_features_in_ = model.cfg.image_size**2 * model.cfg.channels
        return est

    def transform(self, X):
        """Posterior-mean latents, shape (n, L + K)."""
        check_is_fitted(self, "model_")
        from advae.evaluation import posterior_means

        X = _check_images(X, self.model_.cfg.image_size, self.model_.cfg.channels)
        mu_y, mu_o = posterior_means(self.model_, X)
        return np.concatenate([mu_y, mu_o], axis=1)

    def predict(self, X):
        """Attribute signs in {-1, +1}, shape (n, L)."""
        check_is_fitted(self, "model_")
        L = self.model_.cfg.attribute_count
        return np.where(self.transform(X)[:, :L] >= 0, 1, -1).astype(np.int8)

    def inverse_transform(self, Z):
        """Decode latents back to image-likelihood parameters."""
        check_is_fitted(self, "model_")
        import torch

        from advae.networks import to_image

        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim == 1:
            Z = Z[None]
        if Z.shape[1] != self.model_.cfg.latent_dim:
            raise ValueError(f"latent dim must be {self.model_.cfg.latent_dim}")
        with torch.no_grad():
            out = self.model_.decode_params(
                torch.from_numpy(Z).to(next(self.model_.parameters()).dtype)
            )
        img = to_image(out)
        return img[None] if img.ndim == 3 else img

    def score(self, X, y):
        """Mean per-attribute sign accuracy."""
        pred = self.predict(X)
        return float((pred == np.asarray(y)).mean())
