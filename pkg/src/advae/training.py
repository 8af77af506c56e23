"""Deterministic stochastic-gradient training for the four objectives.

Batch indices and reparameterization noise at step k are pure functions of
(run seed, k), so an interrupted run resumed from a checkpoint retraces the
uninterrupted run exactly, and two runs with the same seed produce identical
metrics logs on the same hardware.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from advae.data import Dataset, load_dataset
from advae.networks import (
    AdVaeModel,
    ModelConfig,
    build_model,
    load_checkpoint,
    save_checkpoint,
    sketch_to_tensor,
    to_tensor,
)
from advae.objective import LOSS_FUNCTIONS, LossBreakdown, ObjectiveConfig
from advae.seeding import sub_rng, sub_seed

OBJECTIVES = ("vae", "advae", "advae_sketch", "acvae")

METRICS_HEADER = "step\ttotal\tattr_kl_sum\tstyle_kl\trecon_nll\tcv_total\tcv_accuracy"


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    objective: str
    model: ModelConfig
    loss: ObjectiveConfig
    dataset: str
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_steps: int = 2000
    log_every: int = 10
    eval_every: int = 200
    checkpoint_every: int = 500
    grad_clip: float = 5.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        for name in ("learning_rate", "batch_size", "log_every", "eval_every", "checkpoint_every", "grad_clip"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")
        if self.objective == "advae_sketch" and not self.model.with_sketch:
            raise ValueError("advae_sketch objective requires model.with_sketch")

    def to_dict(self):
        return {
            "objective": self.objective,
            "model": self.model.to_dict(),
            "loss": self.loss.to_dict(),
            "dataset": self.dataset,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "max_steps": self.max_steps,
            "log_every": self.log_every,
            "eval_every": self.eval_every,
            "checkpoint_every": self.checkpoint_every,
            "grad_clip": self.grad_clip,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["model"] = ModelConfig.from_dict(d["model"])
        d["loss"] = ObjectiveConfig.from_dict(d["loss"])
        return cls(**d)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class TrainState:
    step: int
    model: AdVaeModel
    optimizer: torch.optim.Adam
    best_cv: float = float("inf")


def _check_compat(cfg: RunConfig, ds: Dataset):
    if ds.image_size != cfg.model.image_size:
        raise ValueError(f"dataset size {ds.image_size} != model size {cfg.model.image_size}")
    if ds.channels != cfg.model.channels:
        raise ValueError("dataset channel count does not match model config")
    if len(ds.schema) != cfg.model.attribute_count:
        raise ValueError("schema attribute count does not match model config")
    if cfg.objective == "advae_sketch" and "sketches" not in ds.split("train"):
        raise ValueError("sketch objective requires sketches in the dataset")


def _batch(cfg: RunConfig, ds: Dataset, step: int):
    """Batch indices and noise for one step, derived only from (seed, step)."""
    rng = sub_rng(cfg.rng_seed, "step", step)
    n = ds.n("train")
    idx = rng.integers(0, n, size=cfg.batch_size)
    noise = rng.standard_normal((cfg.batch_size, cfg.model.latent_dim))
    return idx, noise


def _loss_for(cfg: RunConfig, model, ds_split, idx, noise, dtype):
    x = to_tensor(ds_split["photos"][idx], dtype)
    noise_t = torch.from_numpy(noise).to(dtype)
    fn = LOSS_FUNCTIONS[cfg.objective]
    if cfg.objective == "vae":
        return fn(model, x, noise_t)
    y = torch.from_numpy(np.asarray(ds_split["labels"][idx], dtype=np.int64))
    if cfg.objective == "advae_sketch":
        s = sketch_to_tensor(ds_split["sketches"][idx], dtype)
        return fn(model, x, y, s, cfg.loss, noise_t)
    return fn(model, x, y, cfg.loss, noise_t)


def evaluate_split(model: AdVaeModel, cfg: RunConfig, ds: Dataset, split: str, eval_seed: int = 0):
    """Deterministic pass over a split: single-sample loss with a fixed eval
    seed, plus per-attribute sign accuracy from posterior means (no sampling,
    no parameter updates)."""
    sp = ds.split(split)
    n = len(sp["labels"])
    dtype = next(model.parameters()).dtype
    rng = sub_rng(cfg.rng_seed, "eval", eval_seed)
    totals = []
    parts = []
    correct = np.zeros(len(ds.schema), dtype=np.int64)
    bs = 128
    with torch.no_grad():
        for start in range(0, n, bs):
            idx = np.arange(start, min(start + bs, n))
            noise = rng.standard_normal((len(idx), cfg.model.latent_dim))
            lb = _loss_for(cfg, model, sp, idx, noise, dtype).detach()
            totals.append(lb.total * len(idx))
            parts.append((lb.attr_kl * len(idx), lb.style_kl * len(idx), lb.recon_nll * len(idx)))
            mu_y = model.posterior(to_tensor(sp["photos"][idx], dtype))[0].numpy()
            pred = np.where(mu_y >= 0, 1, -1)
            correct += (pred == sp["labels"][idx]).sum(axis=0)
    attr_kl = sum(p[0] for p in parts) / n
    loss = LossBreakdown(
        sum(totals) / n, attr_kl, sum(p[1] for p in parts) / n, sum(p[2] for p in parts) / n
    )
    accuracy = correct / n
    return {"loss": loss, "accuracy": accuracy, "mean_accuracy": float(accuracy.mean())}


def train(cfg: RunConfig, out_dir, resume_from=None):
    """Run the configured objective; writes metrics.tsv, checkpoints, and a
    best-CV tag into out_dir. Returns the final TrainState."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = load_dataset(cfg.dataset)
    _check_compat(cfg, ds)
    dtype = torch.float32

    if resume_from is not None:
        model, _, meta, extras = load_checkpoint(resume_from)
        if meta["model_config"] != cfg.model.to_dict():
            raise ValueError("resume checkpoint model config does not match run config")
        start_step = int(meta["step"])
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
        _load_optimizer(optimizer, model, extras)
        best_cv = float(meta.get("extra_meta", {}).get("best_cv", float("inf")))
        metrics_mode = "a"
    else:
        model = build_model(cfg.model, seed=sub_seed(cfg.rng_seed, "init"), dtype=dtype)
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
        start_step = 0
        best_cv = float("inf")
        metrics_mode = "w"

    cfg.save(out_dir / "run_config.json")
    metrics_path = out_dir / "metrics.tsv"
    state = TrainState(step=start_step, model=model, optimizer=optimizer, best_cv=best_cv)

    with open(metrics_path, metrics_mode) as log:
        if metrics_mode == "w":
            log.write(METRICS_HEADER + "\n")
        if cfg.max_steps == 0 and resume_from is None:
            _save_state(out_dir / "final.ckpt", state, cfg, ds)
            return state
        model.train()
        for step in range(start_step + 1, cfg.max_steps + 1):
            idx, noise = _batch(cfg, ds, step)
            lb = _loss_for(cfg, model, ds.split("train"), idx, noise, dtype)
            if not torch.isfinite(lb.total):
                batch = ds.split("train")["photos"][idx]
                raise TrainingDiverged(
                    f"non-finite loss at step {step}: total={float(lb.total.detach())} "
                    f"batch min={batch.min():.4f} max={batch.max():.4f} mean={batch.mean():.4f}"
                )
            optimizer.zero_grad()
            lb.total.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
            optimizer.step()
            state.step = step

            cv_total = cv_acc = ""
            if step % cfg.eval_every == 0 or step == cfg.max_steps:
                model.eval()
                ev = evaluate_split(model, cfg, ds, "cv")
                model.train()
                cv_total = f"{float(ev['loss'].total):.6f}"
                cv_acc = f"{ev['mean_accuracy']:.4f}"
                if float(ev["loss"].total) < state.best_cv:
                    state.best_cv = float(ev["loss"].total)
                    _save_state(out_dir / "best.ckpt", state, cfg, ds)
            if step % cfg.log_every == 0 or step == cfg.max_steps or cv_total:
                d = lb.detach()
                log.write(
                    f"{step}\t{d.total:.6f}\t{d.attr_kl.sum():.6f}\t{d.style_kl:.6f}"
                    f"\t{d.recon_nll:.6f}\t{cv_total}\t{cv_acc}\n"
                )
            if step % cfg.checkpoint_every == 0:
                _save_state(out_dir / f"step_{step:07d}.ckpt", state, cfg, ds)

    model.eval()
    _save_state(out_dir / "final.ckpt", state, cfg, ds)
    if not (out_dir / "best.ckpt").exists():
        _save_state(out_dir / "best.ckpt", state, cfg, ds)
    return state


def _optimizer_arrays(optimizer, model):
    arrays = {}
    names = [n for n, _ in model.named_parameters()]
    params = [p for _, p in model.named_parameters()]
    for name, p in zip(names, params):
        st = optimizer.state.get(p)
        if not st:
            continue
        arrays[f"opt/{name}/exp_avg"] = st["exp_avg"].numpy()
        arrays[f"opt/{name}/exp_avg_sq"] = st["exp_avg_sq"].numpy()
        arrays[f"opt/{name}/step"] = np.asarray(float(st["step"]))
    return arrays


def _load_optimizer(optimizer, model, extras):
    for name, p in model.named_parameters():
        key = f"opt/{name}/exp_avg"
        if key not in extras:
            continue
        optimizer.state[p] = {
            "step": torch.tensor(float(extras[f"opt/{name}/step"])),
            "exp_avg": torch.from_numpy(extras[key].copy()),
            "exp_avg_sq": torch.from_numpy(extras[f"opt/{name}/exp_avg_sq"].copy()),
        }


def _save_state(path, state: TrainState, cfg: RunConfig, ds: Dataset):
    save_checkpoint(
        path,
        state.model,
        ds.schema,
        step=state.step,
        extra_arrays=_optimizer_arrays(state.optimizer, state.model),
        extra_meta={"best_cv": state.best_cv, "objective": cfg.objective},
    )
