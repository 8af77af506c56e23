"""The three experiment procedures as reproducible programs: attribute
traversal, attribute-controlled synthesis from sketches, and style swap,
plus quantitative disentanglement metrics.

Qualitative visual judgments are replaced by probe classifiers: small
supervised models trained on toy ground truth, applied to decoded images.
All operations here are read-only over model parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from scipy.ndimage import gaussian_filter
from sklearn.linear_model import LogisticRegression

from advae.networks import AdVaeModel, sketch_to_tensor, to_image, to_tensor
from advae.seeding import sub_rng

DEFAULT_GRID = tuple(np.linspace(-2.0, 2.0, 7))


@dataclass
class TraversalSpec:
    attribute_index: int
    base_image: np.ndarray
    grid: tuple = DEFAULT_GRID

    def __post_init__(self):
        self.grid = tuple(float(g) for g in self.grid)
        if len(self.grid) > 1 and not all(a < b for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")


def _dtype(model):
    return next(model.parameters()).dtype


def posterior_means(model: AdVaeModel, images: np.ndarray):
    """(mu_y, mu_o) numpy arrays for a batch (or single) image."""
    with torch.no_grad():
        mu_y, _, mu_o, _ = model.posterior(to_tensor(images, _dtype(model)))
    return mu_y.numpy(), mu_o.numpy()


def mean_reconstruction(model: AdVaeModel, images: np.ndarray) -> np.ndarray:
    mu_y, mu_o = posterior_means(model, images)
    z = torch.from_numpy(np.concatenate([mu_y, mu_o], axis=1)).to(_dtype(model))
    with torch.no_grad():
        out = model.decode_params(z)
    return to_image(out)


def traverse_attribute(model: AdVaeModel, spec: TraversalSpec) -> list:
    """Encode the base image with posterior means, sweep one attribute
    variable over the grid keeping every other latent fixed, decode each."""
    if spec.attribute_index >= model.cfg.attribute_count:
        raise ValueError(
            f"attribute index {spec.attribute_index} out of range (L={model.cfg.attribute_count})"
        )
    mu_y, mu_o = posterior_means(model, spec.base_image)
    images = []
    for v in spec.grid:
        zy = mu_y.copy()
        zy[0, spec.attribute_index] = v
        z = torch.from_numpy(np.concatenate([zy, mu_o], axis=1)).to(_dtype(model))
        with torch.no_grad():
            images.append(to_image(model.decode_params(z)))
    return images


def traverse_label_conditioned(model: AdVaeModel, x: np.ndarray, y: np.ndarray, index: int, grid=DEFAULT_GRID) -> list:
    """Traversal for the label-conditioned baseline: sweep one entry of the
    decoder's label input, style code fixed at the posterior mean."""
    _, mu_o = posterior_means(model, x)
    images = []
    for v in grid:
        yy = np.asarray(y, dtype=np.float64).copy()[None, :]
        yy[0, index] = v
        z = torch.from_numpy(np.concatenate([yy, mu_o], axis=1)).to(_dtype(model))
        with torch.no_grad():
            images.append(to_image(model.decode_params(z)))
    return images


def synthesize_from_sketch(model: AdVaeModel, sketch: np.ndarray, y: np.ndarray, style_seed=None, z_o=None):
    """Attribute-controlled synthesis: z_y pinned at the label prior means,
    z_o drawn from N(0, I) with the seed (or supplied directly), decoded with
    the sketch channel. Returns (image, z_o used)."""
    if model.sketch_encoder is None:
        raise ValueError("model was trained without a sketch channel")
    y = np.asarray(y)
    if not np.isin(y, (-1, 1)).all() or len(y) != model.cfg.attribute_count:
        raise ValueError("target labels must be a length-L vector over {-1,+1}")
    if z_o is None:
        if style_seed is None:
            raise ValueError("provide either style_seed or z_o")
        z_o = sub_rng(int(style_seed), "style").standard_normal(model.cfg.style_dim)
    z_o = np.asarray(z_o, dtype=np.float64)
    if z_o.shape != (model.cfg.style_dim,):
        raise ValueError(f"z_o must have shape ({model.cfg.style_dim},)")
    z = torch.from_numpy(np.concatenate([y.astype(np.float64), z_o])[None]).to(_dtype(model))
    with torch.no_grad():
        feats = model.sketch_features(sketch_to_tensor(sketch, _dtype(model)))
        img = to_image(model.decode_params(z, feats))
    return img, z_o


def style_swap(model: AdVaeModel, x_content: np.ndarray, x_style: np.ndarray, content_sketch=None) -> np.ndarray:
    """Decode content's attribute code with style's style code; the sketch
    path additionally conditions on the content image's sketch."""
    mu_y_c, _ = posterior_means(model, x_content)
    _, mu_o_s = posterior_means(model, x_style)
    z = torch.from_numpy(np.concatenate([mu_y_c, mu_o_s], axis=1)).to(_dtype(model))
    with torch.no_grad():
        if model.sketch_encoder is not None:
            if content_sketch is None:
                raise ValueError("sketch-conditioned model needs the content sketch")
            feats = model.sketch_features(sketch_to_tensor(content_sketch, _dtype(model)))
            out = model.decode_params(z, feats)
        else:
            out = model.decode_params(z)
    return to_image(out)


# ---------------------------------------------------------------------------
# probe classifiers: independent supervised stand-ins for visual judgment

@dataclass
class ProbeSet:
    models: list
    image_shape: tuple

    def predict(self, images: np.ndarray) -> np.ndarray:
        """(N, L) predictions in {-1, +1}."""
        X = self._flatten(images)
        return np.stack([m.predict(X) for m in self.models], axis=1).astype(np.int8)

    def scores(self, images: np.ndarray) -> np.ndarray:
        X = self._flatten(images)
        return np.stack([m.decision_function(X) for m in self.models], axis=1)

    def _flatten(self, images):
        arr = np.asarray(images, dtype=np.float64)
        if arr.ndim == 3:
            arr = arr[None]
        return arr.reshape(len(arr), -1)


def train_probes(photos: np.ndarray, labels: np.ndarray, seed: int = 0) -> ProbeSet:
    """One logistic-regression probe per attribute, trained on ground truth.

    Blurred copies are added so probes stay reliable on the slightly soft
    images a decoder produces.
    """
    blurred = np.stack([gaussian_filter(p, sigma=(0.8, 0.8, 0)) for p in photos])
    X = np.concatenate([photos, blurred]).reshape(2 * len(photos), -1)
    Y = np.concatenate([labels, labels])
    models = []
    for i in range(labels.shape[1]):
        clf = LogisticRegression(max_iter=2000, random_state=seed, C=0.5)
        clf.fit(X, Y[:, i])
        models.append(clf)
    return ProbeSet(models=models, image_shape=photos.shape[1:])


# ---------------------------------------------------------------------------
# disentanglement metrics

def sign_accuracy(model: AdVaeModel, photos: np.ndarray, labels: np.ndarray) -> np.ndarray:
    mu_y, _ = posterior_means(model, photos)
    pred = np.where(mu_y >= 0, 1, -1)
    return (pred == labels).mean(axis=0)


@dataclass
class DisentanglementReport:
    attribute_names: tuple
    accuracy: np.ndarray          # (L,) sign-classifier accuracy
    flip_rate: np.ndarray         # (L,) probe decision flips across grid endpoints
    probe_baseline: np.ndarray    # (L,) probe accuracy on mean reconstructions
    leakage: np.ndarray           # (L, L) probe-accuracy drop on j when traversing i

    def max_leakage(self) -> np.ndarray:
        m = self.leakage.copy()
        np.fill_diagonal(m, -np.inf)
        return m.max(axis=1)

    def rows(self):
        for i, name in enumerate(self.attribute_names):
            yield {
                "attribute": name,
                "accuracy": float(self.accuracy[i]),
                "flip_rate": float(self.flip_rate[i]),
                "probe_baseline": float(self.probe_baseline[i]),
                "max_leakage": float(self.max_leakage()[i]),
            }


def disentanglement_report(
    model: AdVaeModel,
    photos: np.ndarray,
    labels: np.ndarray,
    probes: ProbeSet,
    grid=DEFAULT_GRID,
    max_images: int = 100,
    traverse_fn=None,
    attribute_names=None,
) -> DisentanglementReport:
    """Per-attribute sign accuracy, endpoint flip rate, and leakage.

    traverse_fn(model, photo, label, i, grid) -> list of images lets the
    label-conditioned baseline reuse the same metric definitions.
    """
    photos = photos[:max_images]
    labels = labels[:max_images]
    L = labels.shape[1]
    if traverse_fn is None:
        def traverse_fn(m, x, y, i, g):
            return traverse_attribute(m, TraversalSpec(i, x, g))

    recon = mean_reconstruction(model, photos)
    if recon.ndim == 3:
        recon = recon[None]
    baseline_pred = probes.predict(recon)
    probe_baseline = (baseline_pred == labels).mean(axis=0)

    endpoints = (grid[0], grid[-1])
    flip = np.zeros(L)
    leak = np.zeros((L, L))
    for i in range(L):
        lo_imgs, hi_imgs = [], []
        for k in range(len(photos)):
            seq = traverse_fn(model, photos[k], labels[k], i, endpoints)
            lo_imgs.append(seq[0])
            hi_imgs.append(seq[-1])
        lo_pred = probes.predict(np.stack(lo_imgs))
        hi_pred = probes.predict(np.stack(hi_imgs))
        flip[i] = (lo_pred[:, i] != hi_pred[:, i]).mean()
        for j in range(L):
            acc_j = 0.5 * ((lo_pred[:, j] == labels[:, j]).mean() + (hi_pred[:, j] == labels[:, j]).mean())
            leak[i, j] = probe_baseline[j] - acc_j
    return DisentanglementReport(
        attribute_names=tuple(attribute_names) if attribute_names is not None else tuple(f"attr_{i}" for i in range(L)),
        accuracy=sign_accuracy(model, photos, labels),
        flip_rate=flip,
        probe_baseline=probe_baseline,
        leakage=leak,
    )


def write_metric_table(path, rows, columns=None):
    """Delimited text with a header row; one file per report."""
    rows = list(rows)
    if not rows:
        Path(path).write_text("")
        return
    columns = columns or list(rows[0].keys())
    lines = ["\t".join(columns)]
    for r in rows:
        lines.append("\t".join(_fmt(r[c]) for c in columns))
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


# ---------------------------------------------------------------------------
# baseline comparison and image sheets

def image_sheet(rows_of_images, path, caption: str):
    """Write a grid image (lossless PNG) plus a sidecar caption file."""
    rows = [[_to_u8(im) for im in row] for row in rows_of_images]
    h, w = rows[0][0].shape[:2]
    sheet = np.ones(((h + 2) * len(rows) - 2, (w + 2) * len(rows[0]) - 2, 3), dtype=np.uint8) * 255
    for r, row in enumerate(rows):
        for c, im in enumerate(row):
            sheet[r * (h + 2) : r * (h + 2) + h, c * (w + 2) : c * (w + 2) + w] = im
    path = Path(path)
    Image.fromarray(sheet).save(path, format="PNG")
    path.with_suffix(".txt").write_text(caption + "\n")
    return path


def _to_u8(im):
    arr = np.asarray(im, dtype=np.float64)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return np.clip(arr * 255.0, 0, 255).round().astype(np.uint8)


def compare_baseline(
    advae_model: AdVaeModel,
    acvae_model: AdVaeModel,
    photos: np.ndarray,
    labels: np.ndarray,
    probes: ProbeSet,
    attribute_names,
    grid=DEFAULT_GRID,
    sheet_path=None,
    sheet_images: int = 4,
    max_images: int = 100,
):
    """Side-by-side disentanglement metrics plus a traversal grid sheet
    (ground-truth column, one row per model per base image)."""
    if advae_model.cfg.to_dict() != {**acvae_model.cfg.to_dict(), "with_sketch": advae_model.cfg.with_sketch}:
        raise ValueError("model configs differ; comparison requires matched configs")
    rep_ad = disentanglement_report(advae_model, photos, labels, probes, grid, max_images)
    rep_ac = disentanglement_report(
        acvae_model, photos, labels, probes, grid, max_images,
        traverse_fn=lambda m, x, y, i, g: traverse_label_conditioned(m, x, y, i, g),
    )
    table = []
    for i, name in enumerate(attribute_names):
        table.append(
            {
                "attribute": name,
                "advae_flip_rate": float(rep_ad.flip_rate[i]),
                "acvae_flip_rate": float(rep_ac.flip_rate[i]),
                "advae_accuracy": float(rep_ad.accuracy[i]),
                "advae_max_leakage": float(rep_ad.max_leakage()[i]),
                "acvae_max_leakage": float(rep_ac.max_leakage()[i]),
            }
        )
    if sheet_path is not None:
        rows = []
        idx = 0  # traverse the first attribute for the sheet
        for k in range(min(sheet_images, len(photos))):
            t_ad = traverse_attribute(advae_model, TraversalSpec(idx, photos[k], grid))
            t_ac = traverse_label_conditioned(acvae_model, photos[k], labels[k], idx, grid)
            rows.append([photos[k]] + t_ad)
            rows.append([photos[k]] + t_ac)
        image_sheet(
            rows,
            sheet_path,
            f"Traversal of attribute '{attribute_names[idx]}' over grid {list(grid)}. "
            "Column 1: ground truth. For each base image, row 1: disentangled model, "
            "row 2: label-conditioned baseline.",
        )
    return table, rep_ad, rep_ac
