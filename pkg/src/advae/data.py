"""Toy-face dataset generation, line-drawing simulation, and dataset I/O.

The toy renderer is a deterministic rasterizer over a handful of appearance
factors; four of them (hair darkness, skin paleness, glasses, open mouth)
define the binary attribute labels, the rest (background, illumination,
pose, hue) are style factors sampled independently. Line drawings are
simulated with a difference-of-Gaussians edge extractor followed by
random-threshold binarization.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter, maximum_filter

from advae.seeding import sub_rng

GENERATOR_VERSION = 1

TOY_ATTRIBUTES = ("hair_dark", "pale_skin", "glasses", "mouth_open")

DEFAULT_THRESHOLD_RANGE = (0.3, 0.7)


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attribute names with their prior std and KL weights."""

    names: tuple
    prior_sigma: float = 0.25
    alpha: tuple = None

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names or len(set(names)) != len(names):
            raise ValueError("attribute names must be unique and non-empty")
        alpha = self.alpha if self.alpha is not None else (10.0,) * len(names)
        alpha = tuple(float(a) for a in alpha)
        if len(alpha) != len(names):
            raise ValueError("alpha length must match attribute count")
        object.__setattr__(self, "alpha", alpha)
        if self.prior_sigma <= 0:
            raise ValueError("prior_sigma must be positive")

    def __len__(self):
        return len(self.names)

    def to_dict(self):
        return {
            "names": list(self.names),
            "prior_sigma": self.prior_sigma,
            "alpha": list(self.alpha),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["names"]), float(d["prior_sigma"]), tuple(d["alpha"]))


def toy_schema(prior_sigma: float = 0.25, alpha_value: float = 10.0) -> AttributeSchema:
    return AttributeSchema(TOY_ATTRIBUTES, prior_sigma, (alpha_value,) * len(TOY_ATTRIBUTES))


@dataclass(frozen=True)
class ToyFaceSpec:
    """Appearance factors of one toy face; all in declared ranges."""

    face_hue: float = 0.5
    skin_shade: float = 0.5
    hair_shade: float = 0.5
    mouth_open: bool = False
    glasses: bool = False
    bangs: bool = False
    smile: bool = False
    pose_jitter: float = 0.0
    background_shade: float = 0.5
    illumination_gain: float = 1.0

    def __post_init__(self):
        for name in ("face_hue", "skin_shade", "hair_shade"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not -1.0 <= self.pose_jitter <= 1.0:
            raise ValueError("pose_jitter must be in [-1, 1]")
        if not 0.0 <= self.background_shade <= 1.0:
            raise ValueError("background_shade must be in [0, 1]")
        if not 0.5 <= self.illumination_gain <= 1.5:
            raise ValueError("illumination_gain must be in [0.5, 1.5]")

    def labels(self) -> np.ndarray:
        """Ground-truth +-1 labels in TOY_ATTRIBUTES order."""
        bits = [
            self.hair_shade > 0.5,
            self.skin_shade > 0.5,
            self.glasses,
            self.mouth_open,
        ]
        return np.array([1 if b else -1 for b in bits], dtype=np.int8)


def _ellipse_mask(yy, xx, cy, cx, ry, rx):
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def _face_geometry(spec: ToyFaceSpec, size: int):
    """Centers and radii (in pixels) of the face parts, pose jitter applied."""
    jit = spec.pose_jitter * size / 16.0
    cx = size * 0.5 + jit
    cy = size * 0.54
    return {
        "head": (cy, cx, size * 0.38, size * 0.30),
        "eye_y": size * 0.46,
        "eye_dx": size * 0.13,
        "eye_r": size * 0.035,
        "mouth": (size * 0.72, cx),
        "cx": cx,
        "cy": cy,
    }


def eye_region_box(spec: ToyFaceSpec, size: int):
    """Bounding box (y0, y1, x0, x1) that contains eyes and glasses."""
    g = _face_geometry(spec, size)
    ry = size * 0.11
    rx = size * 0.24
    y0 = int(np.floor(g["eye_y"] - ry))
    y1 = int(np.ceil(g["eye_y"] + ry)) + 1
    x0 = int(np.floor(g["cx"] - rx))
    x1 = int(np.ceil(g["cx"] + rx)) + 1
    return max(y0, 0), min(y1, size), max(x0, 0), min(x1, size)


def hair_region_mask(spec: ToyFaceSpec, size: int) -> np.ndarray:
    """Boolean mask of the hair cap (plus bangs area when enabled)."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    g = _face_geometry(spec, size)
    cy, cx, ry, rx = g["head"]
    head = _ellipse_mask(yy, xx, cy, cx, ry, rx)
    cap = head & (yy < cy - 0.45 * ry)
    if spec.bangs:
        cap |= head & (yy < cy - 0.25 * ry) & (np.abs(xx - cx) < 0.6 * rx)
    return cap


def background_mask(spec: ToyFaceSpec, size: int) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    cy, cx, ry, rx = _face_geometry(spec, size)["head"]
    return ~_ellipse_mask(yy, xx, cy, cx, ry * 1.02, rx * 1.02)


def render_toy_face(spec: ToyFaceSpec, size: int = 32) -> np.ndarray:
    """Rasterize one face; returns float64 (size, size, 3) in [0, 1].

    Identical specs produce bit-identical images.
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    g = _face_geometry(spec, size)
    img = np.empty((size, size, 3), dtype=np.float64)
    img[...] = spec.background_shade

    # head
    cy, cx, ry, rx = g["head"]
    head = _ellipse_mask(yy, xx, cy, cx, ry, rx)
    # contrast chosen so the pale/dark modes stay separable under the
    # sampled illumination range
    skin_v = 0.32 + 0.62 * spec.skin_shade
    skin = np.array(
        [skin_v, skin_v * (0.80 + 0.12 * spec.face_hue), skin_v * (0.62 + 0.18 * spec.face_hue)]
    )
    img[head] = skin

    # hair: cap over the top of the head, optional bangs over the forehead
    hair = hair_region_mask(spec, size)
    hair_v = 0.88 - 0.80 * spec.hair_shade
    img[hair] = np.array([hair_v, hair_v * 0.92, hair_v * 0.80])

    # eyes
    ey, edx, er = g["eye_y"], g["eye_dx"], g["eye_r"]
    for sgn in (-1, 1):
        eye = _ellipse_mask(yy, xx, ey, cx + sgn * edx, er, er)
        img[eye] = 0.06

    # glasses: rings around the eyes plus a bridge, kept inside eye_region_box
    if spec.glasses:
        ring_r = er * 2.4
        for sgn in (-1, 1):
            ecx = cx + sgn * edx
            outer = _ellipse_mask(yy, xx, ey, ecx, ring_r, ring_r)
            inner = _ellipse_mask(yy, xx, ey, ecx, ring_r - max(1.2, size / 24.0), ring_r - max(1.2, size / 24.0))
            img[outer & ~inner] = 0.08
        bridge = (np.abs(yy - ey) < max(0.8, size / 48.0)) & (np.abs(xx - cx) < edx - ring_r + 1.0)
        img[bridge] = 0.08

    # mouth
    my, mcx = g["mouth"]
    m_rx = size * (0.11 if not spec.smile else 0.14)
    if spec.mouth_open:
        mouth = _ellipse_mask(yy, xx, my, mcx, size * 0.05, m_rx)
        img[mouth] = np.array([0.45, 0.10, 0.12])
    else:
        mouth = _ellipse_mask(yy, xx, my, mcx, max(0.8, size / 50.0), m_rx)
        img[mouth] = np.array([0.30, 0.08, 0.10])

    np.clip(img * spec.illumination_gain, 0.0, 1.0, out=img)
    return img


def sample_toy_spec(rng: np.random.Generator) -> ToyFaceSpec:
    """Draw one spec; attribute factors bimodal/Bernoulli, style factors
    independent of them."""

    def bimodal():
        # keeps labels salient: no mass near the 0.5 decision boundary
        if rng.random() < 0.5:
            return rng.uniform(0.0, 0.25)
        return rng.uniform(0.75, 1.0)

    return ToyFaceSpec(
        face_hue=rng.uniform(0.0, 1.0),
        skin_shade=bimodal(),
        hair_shade=bimodal(),
        mouth_open=bool(rng.random() < 0.5),
        glasses=bool(rng.random() < 0.5),
        bangs=bool(rng.random() < 0.5),
        smile=bool(rng.random() < 0.5),
        pose_jitter=rng.uniform(-1.0, 1.0),
        background_shade=rng.uniform(0.05, 0.95),
        illumination_gain=rng.uniform(0.85, 1.15),
    )


def extract_line_drawing(photo: np.ndarray, stroke_weight: str = "thin") -> np.ndarray:
    """Difference-of-Gaussians edge map, inverted so strokes are dark.

    Returns float64 in [0, 1]; 1 is background (white), values near 0 are
    strokes. The thick variant uses larger radii, giving dilated strokes.
    Isotropic DoG is a pluggable stand-in for fancier coherent-line filters.
    """
    if stroke_weight not in ("thin", "thick"):
        raise ValueError(f"unknown stroke_weight {stroke_weight!r}")
    gray = photo.mean(axis=2) if photo.ndim == 3 else np.asarray(photo, dtype=np.float64)
    s1 = 0.8 if stroke_weight == "thin" else 1.6
    s2 = 1.6 * s1
    resp = np.abs(gaussian_filter(gray, s1) - gaussian_filter(gray, s2))
    if stroke_weight == "thick":
        resp = maximum_filter(resp, size=3)
    peak = resp.max()
    if peak > 1e-12:
        resp = resp / peak
    else:
        resp = np.zeros_like(resp)
    return 1.0 - resp


def binarize_random(edge_map: np.ndarray, threshold_range, rng_seed: int):
    """Threshold an edge map at a uniform random threshold.

    Pixels darker than the threshold become stroke (1), the rest background
    (0). Returns (sketch uint8, threshold used).
    """
    lo, hi = float(threshold_range[0]), float(threshold_range[1])
    if not (0.0 <= lo <= hi <= 1.0):
        raise ValueError(f"invalid threshold range [{lo}, {hi}]")
    rng = np.random.default_rng(rng_seed)
    t = lo + (hi - lo) * rng.random()
    sketch = (edge_map < t).astype(np.uint8)
    return sketch, t


@dataclass
class Dataset:
    """In-memory view of a persisted dataset: per-split arrays plus schema."""

    schema: AttributeSchema
    image_size: int
    splits: dict  # split name -> dict(photos, sketches, labels)
    manifest: dict = field(default_factory=dict)

    def split(self, name: str):
        return self.splits[name]

    def n(self, name: str) -> int:
        return len(self.splits[name]["labels"])

    @property
    def channels(self) -> int:
        any_split = next(iter(self.splits.values()))
        return any_split["photos"].shape[-1]


_SPLIT_NAMES = ("train", "cv", "test")
_KINDS = ("photos", "sketches", "labels")


def _save_splits(out_dir: Path, splits: dict, manifest: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in splits:
        for kind in _KINDS:
            np.save(out_dir / f"{name}_{kind}.npy", splits[name][kind])
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_dataset(path) -> Dataset:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    schema = AttributeSchema.from_dict(manifest["schema"])
    splits = {}
    for name in manifest["counts"]:
        splits[name] = {kind: np.load(path / f"{name}_{kind}.npy") for kind in _KINDS}
    return Dataset(schema=schema, image_size=manifest["image_size"], splits=splits, manifest=manifest)


def build_dataset(
    n: int,
    schema: AttributeSchema,
    size: int,
    split: dict,
    rng_seed: int,
    out_dir,
    threshold_range=DEFAULT_THRESHOLD_RANGE,
) -> Dataset:
    """Generate n toy PairedSamples and persist them, deterministically in
    (rng_seed, config).

    split = {"train_frac": f, "cv_frac": g}; test gets the remainder.
    """
    train_frac, cv_frac = float(split["train_frac"]), float(split["cv_frac"])
    if not (0 < train_frac < 1 and 0 < cv_frac < 1 and train_frac + cv_frac < 1):
        raise ValueError("split fractions must be in (0,1) and sum below 1")
    n_train = int(round(n * train_frac))
    n_cv = int(round(n * cv_frac))
    n_test = n - n_train - n_cv
    if min(n_train, n_cv, n_test) < 1:
        raise ValueError(f"n={n} too small for split {split}")

    if tuple(schema.names) != TOY_ATTRIBUTES:
        raise ValueError("toy generator produces the fixed toy attribute set")

    photos = np.empty((n, size, size, 3), dtype=np.float32)
    sketches = np.empty((n, size, size), dtype=np.uint8)
    labels = np.empty((n, len(schema)), dtype=np.int8)
    for i in range(n):
        spec = sample_toy_spec(sub_rng(rng_seed, "sample", i))
        photo = render_toy_face(spec, size)
        edge = extract_line_drawing(photo, "thin")
        sketch, _ = binarize_random(edge, threshold_range, rng_seed=_sketch_seed(rng_seed, i))
        photos[i] = photo.astype(np.float32)
        sketches[i] = sketch
        labels[i] = spec.labels()

    order = sub_rng(rng_seed, "shuffle").permutation(n)
    bounds = {"train": order[:n_train], "cv": order[n_train : n_train + n_cv], "test": order[n_train + n_cv :]}
    splits = {
        name: {"photos": photos[idx], "sketches": sketches[idx], "labels": labels[idx]}
        for name, idx in bounds.items()
    }
    manifest = {
        "format_version": 1,
        "generator_version": GENERATOR_VERSION,
        "kind": "toy",
        "schema": schema.to_dict(),
        "image_size": size,
        "seed": int(rng_seed),
        "threshold_range": list(threshold_range),
        "counts": {name: int(len(idx)) for name, idx in bounds.items()},
    }
    _save_splits(Path(out_dir), splits, manifest)
    return Dataset(schema=schema, image_size=size, splits=splits, manifest=manifest)


def _sketch_seed(rng_seed: int, i) -> int:
    return int(np.random.SeedSequence([int(rng_seed), 0x5E7C, int(i) if not isinstance(i, str) else 0]).generate_state(1)[0])


def _center_crop_resize(img: Image.Image, size: int) -> np.ndarray:
    w, h = img.size
    side = min(w, h)
    left = (w - side) // 2
    top = (h - side) // 2
    img = img.crop((left, top, left + side, top + side)).resize((size, size), Image.BICUBIC)
    arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return arr


def ingest_external(
    photo_dir,
    attribute_table,
    schema: AttributeSchema,
    size: int,
    out_dir,
    rng_seed: int = 0,
    threshold_range=DEFAULT_THRESHOLD_RANGE,
):
    """Ingest a photo directory plus a delimited attribute table.

    Table format: header row of attribute names, first column the image
    filename, entries -1/+1. Missing files and malformed labels are
    reported per row; ingest continues. Everything lands in the test split
    (external data is evaluation data here); returns (Dataset, errors).
    """
    photo_dir = Path(photo_dir)
    text = Path(attribute_table).read_text() if not isinstance(attribute_table, io.StringIO) else attribute_table.getvalue()
    delim = "\t" if "\t" in text.splitlines()[0] else "," if text.strip() else ","
    rows = list(csv.reader(io.StringIO(text), delimiter=delim))
    errors = []
    photos, sketches, labels = [], [], []
    if rows:
        header = [h.strip() for h in rows[0][1:]]
        if tuple(header) != tuple(schema.names):
            raise ValueError(f"attribute table header {header} does not match schema {list(schema.names)}")
        for rownum, row in enumerate(rows[1:], start=2):
            if len(row) != len(schema) + 1:
                errors.append((rownum, "wrong column count"))
                continue
            fname = row[0].strip()
            path = photo_dir / fname
            if not path.is_file():
                errors.append((rownum, f"missing file {fname}"))
                continue
            try:
                lab = np.array([int(v) for v in row[1:]], dtype=np.int8)
            except ValueError:
                errors.append((rownum, "malformed label"))
                continue
            if not np.isin(lab, (-1, 1)).all():
                errors.append((rownum, "labels must be -1/+1"))
                continue
            photo = _center_crop_resize(Image.open(path), size)
            edge = extract_line_drawing(photo.astype(np.float64), "thin")
            sketch, _ = binarize_random(edge, threshold_range, rng_seed=_sketch_seed(rng_seed, len(photos)))
            photos.append(photo)
            sketches.append(sketch)
            labels.append(lab)

    n = len(photos)
    splits = {
        "test": {
            "photos": np.array(photos, dtype=np.float32).reshape(n, size, size, 3),
            "sketches": np.array(sketches, dtype=np.uint8).reshape(n, size, size),
            "labels": np.array(labels, dtype=np.int8).reshape(n, len(schema)),
        }
    }
    manifest = {
        "format_version": 1,
        "generator_version": GENERATOR_VERSION,
        "kind": "external",
        "schema": schema.to_dict(),
        "image_size": size,
        "seed": int(rng_seed),
        "threshold_range": list(threshold_range),
        "counts": {"test": n},
        "errors": [[r, msg] for r, msg in errors],
    }
    _save_splits(Path(out_dir), splits, manifest)
    return Dataset(schema=schema, image_size=size, splits=splits, manifest=manifest), errors
