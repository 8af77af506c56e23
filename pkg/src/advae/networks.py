"""Two-channel architecture: shared convolutional encoder trunk with an
attribute head and a style head, a decoder over the concatenated latent,
and an optional sketch-channel encoder whose feature maps are concatenated
into the decoder's upsampling stages.

Public image convention is numpy (H, W, C) float in [0, 1]; torch tensors
are NCHW internally. Hidden activations are tanh (smooth everywhere, which
keeps finite-difference gradient checks clean); posterior stds go through
softplus so they are strictly positive for any finite input.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from advae.data import AttributeSchema
from advae.distributions import DiagonalGaussian

CHECKPOINT_MAGIC = "ADVAE-CKPT"
CHECKPOINT_VERSION = 1

_STD_FLOOR = 1e-4


@dataclass(frozen=True)
class ModelConfig:
    image_size: int = 32
    channels: int = 3
    attribute_count: int = 4
    style_dim: int = 16
    encoder_widths: tuple = (32, 64, 128)
    decoder_widths: tuple = (128, 64, 32)
    sketch_widths: tuple = (16, 32)
    decoder_likelihood: str = "bernoulli"
    with_sketch: bool = False
    gaussian_std: float = 0.1  # only used by the gaussian-fixed-variance likelihood

    def __post_init__(self):
        object.__setattr__(self, "encoder_widths", tuple(self.encoder_widths))
        object.__setattr__(self, "decoder_widths", tuple(self.decoder_widths))
        object.__setattr__(self, "sketch_widths", tuple(self.sketch_widths))
        s = self.image_size
        if s < 16 or (s & (s - 1)) != 0:
            raise ValueError("image_size must be a power of two >= 16")
        if self.attribute_count < 1 or self.style_dim < 1:
            raise ValueError("attribute_count and style_dim must be >= 1")
        if self.decoder_likelihood not in ("bernoulli", "gaussian-fixed-variance"):
            raise ValueError(f"unknown decoder_likelihood {self.decoder_likelihood!r}")
        if s // (2 ** len(self.encoder_widths)) < 1 or s // (2 ** len(self.decoder_widths)) < 2:
            raise ValueError("too many conv stages for this image size")
        if self.with_sketch and set(self.sketch_join_sizes()) - set(self.decoder_stage_sizes()):
            raise ValueError("sketch feature maps must align with decoder stages")

    @property
    def latent_dim(self) -> int:
        return self.attribute_count + self.style_dim

    def decoder_base(self) -> int:
        return self.image_size // (2 ** len(self.decoder_widths))

    def decoder_stage_sizes(self) -> tuple:
        """Spatial sizes of the upsampling stages that can accept sketch joins."""
        base = self.decoder_base()
        return tuple(base * 2**i for i in range(1, len(self.decoder_widths)))

    def sketch_join_sizes(self) -> tuple:
        """Sizes emitted by the sketch channel, largest first in encoder order."""
        return tuple(self.image_size // 2 ** (i + 1) for i in range(len(self.sketch_widths)))

    def to_dict(self):
        return {
            "image_size": self.image_size,
            "channels": self.channels,
            "attribute_count": self.attribute_count,
            "style_dim": self.style_dim,
            "encoder_widths": list(self.encoder_widths),
            "decoder_widths": list(self.decoder_widths),
            "sketch_widths": list(self.sketch_widths),
            "decoder_likelihood": self.decoder_likelihood,
            "with_sketch": self.with_sketch,
            "gaussian_std": self.gaussian_std,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for k in ("encoder_widths", "decoder_widths", "sketch_widths"):
            d[k] = tuple(d[k])
        return cls(**d)


class EncoderTrunk(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        convs = []
        c = cfg.channels
        for w in cfg.encoder_widths:
            convs.append(nn.Conv2d(c, w, 3, stride=2, padding=1))
            c = w
        self.convs = nn.ModuleList(convs)
        side = cfg.image_size // (2 ** len(cfg.encoder_widths))
        self.out_features = c * side * side

    def forward(self, x):
        h = x
        for conv in self.convs:
            h = torch.tanh(conv(h))
        return h.flatten(1)


class Encoder(nn.Module):
    """Shared trunk, two affine heads: attribute posterior and style posterior."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.trunk = EncoderTrunk(cfg)
        L, K = cfg.attribute_count, cfg.style_dim
        self.attr_head = nn.Linear(self.trunk.out_features, 2 * L)
        self.style_head = nn.Linear(self.trunk.out_features, 2 * K)

    def forward(self, x):
        h = self.trunk(x)
        L, K = self.cfg.attribute_count, self.cfg.style_dim
        a = self.attr_head(h)
        s = self.style_head(h)
        mu_y, raw_y = a[:, :L], a[:, L:]
        mu_o, raw_o = s[:, :K], s[:, K:]
        std_y = F.softplus(raw_y) + _STD_FLOOR
        std_o = F.softplus(raw_o) + _STD_FLOOR
        return mu_y, std_y, mu_o, std_o


class SketchEncoder(nn.Module):
    """Stride-2 conv stack over the line drawing; emits one feature map per
    join point, ordered to match the decoder's upsampling stages."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        convs = []
        c = 1
        for w in cfg.sketch_widths:
            convs.append(nn.Conv2d(c, w, 3, stride=2, padding=1))
            c = w
        self.convs = nn.ModuleList(convs)
        self.cfg = cfg

    def forward(self, s):
        maps = []
        h = s
        for conv in self.convs:
            h = torch.tanh(conv(h))
            maps.append(h)
        # encoder emits largest-first; decoder consumes smallest-first
        stage_sizes = self.cfg.decoder_stage_sizes()
        by_size = {m.shape[-1]: m for m in maps}
        return [by_size[sz] for sz in stage_sizes if sz in by_size]


class Decoder(nn.Module):
    """Dense projection to a small grid, then nearest-upsample + conv stages
    with optional channel-wise sketch concatenation, final sigmoid output."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        base = cfg.decoder_base()
        w0 = cfg.decoder_widths[0]
        self.project = nn.Linear(cfg.latent_dim, w0 * base * base)
        self.base = base
        self.w0 = w0

        join_by_size = {}
        if cfg.with_sketch:
            for sz, w in zip(cfg.sketch_join_sizes(), cfg.sketch_widths):
                join_by_size[sz] = w
        stage_sizes = cfg.decoder_stage_sizes()
        convs = []
        self.join_channels = []
        c = w0
        for sz, w in zip(stage_sizes, cfg.decoder_widths[1:]):
            extra = join_by_size.get(sz, 0)
            self.join_channels.append(extra)
            convs.append(nn.Conv2d(c + extra, w, 3, padding=1))
            c = w
        self.convs = nn.ModuleList(convs)
        self.out_conv = nn.Conv2d(c, cfg.channels, 3, padding=1)

    def forward(self, z, sketch_features=None):
        h = torch.tanh(self.project(z)).reshape(-1, self.w0, self.base, self.base)
        feats = list(sketch_features) if sketch_features is not None else None
        fi = 0
        for conv, extra in zip(self.convs, self.join_channels):
            h = F.interpolate(h, scale_factor=2, mode="nearest")
            if extra:
                if feats is not None:
                    f = feats[fi]
                    if f.shape[-2:] != h.shape[-2:] or f.shape[1] != extra:
                        raise ValueError("sketch feature map misaligned with decoder stage")
                else:
                    f = h.new_zeros(h.shape[0], extra, h.shape[2], h.shape[3])
                fi += 1
                h = torch.cat([h, f], dim=1)
            h = torch.tanh(conv(h))
        h = F.interpolate(h, scale_factor=2, mode="nearest")
        return torch.sigmoid(self.out_conv(h))


class AdVaeModel(nn.Module):
    """Encoder + decoder (+ sketch channel when configured)."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        self.encoder = Encoder(cfg)
        self.decoder = Decoder(cfg)
        self.sketch_encoder = SketchEncoder(cfg) if cfg.with_sketch else None

    def posterior(self, x):
        """Batched posteriors: (mu_y, std_y, mu_o, std_o)."""
        self._check_image(x)
        return self.encoder(x)

    def decode_params(self, z, sketch_features=None):
        if z.shape[-1] != self.cfg.latent_dim:
            raise ValueError(f"latent dim {z.shape[-1]} != {self.cfg.latent_dim}")
        return self.decoder(z, sketch_features)

    def sketch_features(self, s):
        if self.sketch_encoder is None:
            raise ValueError("model was built without a sketch channel")
        if s.dim() != 4 or s.shape[1] != 1 or s.shape[-1] != self.cfg.image_size:
            raise ValueError(f"bad sketch shape {tuple(s.shape)}")
        return self.sketch_encoder(s)

    def _check_image(self, x):
        c, s = self.cfg.channels, self.cfg.image_size
        if x.dim() != 4 or x.shape[1] != c or x.shape[2] != s or x.shape[3] != s:
            raise ValueError(f"bad image shape {tuple(x.shape)}, expected (N,{c},{s},{s})")


def build_model(cfg: ModelConfig, seed: int = 0, dtype=torch.float32) -> AdVaeModel:
    torch.manual_seed(seed)
    model = AdVaeModel(cfg).to(dtype)
    model.eval()
    return model


# ---------------------------------------------------------------------------
# numpy <-> torch image plumbing

def to_tensor(images: np.ndarray, dtype=torch.float32) -> torch.Tensor:
    """(N,H,W,C) or (H,W,C) numpy in [0,1] -> NCHW tensor."""
    arr = np.asarray(images, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[None]
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2))).to(dtype)


def sketch_to_tensor(sketches: np.ndarray, dtype=torch.float32) -> torch.Tensor:
    """(N,H,W) or (H,W) binary sketch -> (N,1,H,W) tensor."""
    arr = np.asarray(sketches, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    return torch.from_numpy(arr[:, None]).to(dtype)


def to_image(t: torch.Tensor) -> np.ndarray:
    """NCHW tensor -> (N,H,W,C) float64 numpy; squeezes the batch if N==1."""
    arr = t.detach().cpu().double().numpy().transpose(0, 2, 3, 1)
    return arr[0] if arr.shape[0] == 1 else arr


# ---------------------------------------------------------------------------
# single-image convenience operations

def encode(model: AdVaeModel, x: np.ndarray):
    """Posterior of one image: (list of L one-dim attribute Gaussians,
    style Gaussian of dim K)."""
    with torch.no_grad():
        mu_y, std_y, mu_o, std_o = model.posterior(to_tensor(x, _dtype(model)))
    mu_y, std_y = mu_y[0].numpy(), std_y[0].numpy()
    q_y = [DiagonalGaussian(mu_y[i : i + 1], std_y[i : i + 1]) for i in range(model.cfg.attribute_count)]
    q_o = DiagonalGaussian(mu_o[0].numpy(), std_o[0].numpy())
    return q_y, q_o


def decode(model: AdVaeModel, z_y: np.ndarray, z_o: np.ndarray) -> np.ndarray:
    """Decode one latent to per-pixel likelihood parameters (H,W,C) in [0,1]."""
    z = torch.from_numpy(np.concatenate([z_y, z_o]).astype(np.float64)).to(_dtype(model))[None]
    with torch.no_grad():
        out = model.decode_params(z)
    return to_image(out)


def decode_with_sketch(model: AdVaeModel, z_y, z_o, sketch: np.ndarray) -> np.ndarray:
    z = torch.from_numpy(np.concatenate([z_y, z_o]).astype(np.float64)).to(_dtype(model))[None]
    with torch.no_grad():
        feats = model.sketch_features(sketch_to_tensor(sketch, _dtype(model)))
        out = model.decode_params(z, feats)
    return to_image(out)


def _dtype(model: AdVaeModel):
    return next(model.parameters()).dtype


# ---------------------------------------------------------------------------
# checkpoint archive: zip of meta.json + named .npy arrays, deterministic bytes

def _zip_write(zf: zipfile.ZipFile, name: str, payload: bytes):
    info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
    info.compress_type = zipfile.ZIP_STORED
    zf.writestr(info, payload)


def save_checkpoint(
    path,
    model: AdVaeModel,
    schema: AttributeSchema,
    step: int = 0,
    extra_arrays: dict | None = None,
    extra_meta: dict | None = None,
):
    """Self-describing archive: magic + version + configs + named arrays."""
    meta = {
        "magic": CHECKPOINT_MAGIC,
        "version": CHECKPOINT_VERSION,
        "model_config": model.cfg.to_dict(),
        "schema": schema.to_dict(),
        "step": int(step),
        "dtype": str(_dtype(model)).split(".")[-1],
        "params": [],
        "extras": sorted(extra_arrays) if extra_arrays else [],
    }
    arrays = {}
    for name, p in sorted(model.state_dict().items()):
        meta["params"].append(name)
        arrays[f"params/{name}"] = p.detach().cpu().numpy()
    for name, a in sorted((extra_arrays or {}).items()):
        arrays[f"extras/{name}"] = np.asarray(a)
    if extra_meta:
        meta["extra_meta"] = extra_meta
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w") as zf:
        _zip_write(zf, "meta.json", (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode())
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.save(buf, arrays[name])
            _zip_write(zf, name + ".npy", buf.getvalue())
    return path


def load_checkpoint(path):
    """Returns (model, schema, meta, extras dict of arrays)."""
    with zipfile.ZipFile(Path(path), "r") as zf:
        meta = json.loads(zf.read("meta.json"))
        if meta.get("magic") != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint archive")
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {meta.get('version')}")
        cfg = ModelConfig.from_dict(meta["model_config"])
        schema = AttributeSchema.from_dict(meta["schema"])
        dtype = getattr(torch, meta.get("dtype", "float32"))
        model = AdVaeModel(cfg).to(dtype)
        state = {}
        for name in meta["params"]:
            state[name] = torch.from_numpy(np.load(io.BytesIO(zf.read(f"params/{name}.npy")))).to(dtype)
        model.load_state_dict(state)
        model.eval()
        extras = {}
        for name in meta.get("extras", []):
            extras[name] = np.load(io.BytesIO(zf.read(f"extras/{name}.npy")))
    return model, schema, meta, extras
