"""Single entry-point command wiring all modules into reproducible runs.

Every subcommand takes one --seed, fans it out through named sub-seeds,
writes a run manifest into its output directory, and refuses to reuse a
non-empty output directory without --force.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

import advae
from advae import data as data_mod
from advae import evaluation as eval_mod
from advae.networks import load_checkpoint
from advae.objective import ObjectiveConfig
from advae.training import RunConfig, evaluate_split, train

OUT_ROOT_ENV = "ADVAE_OUT_ROOT"


class CliError(click.ClickException):
    exit_code = 1


def _resolve_out(out: str) -> Path:
    root = os.environ.get(OUT_ROOT_ENV)
    p = Path(out)
    if root and not p.is_absolute():
        p = Path(root) / p
    return p


def _prepare_out(out: str, force: bool) -> Path:
    p = _resolve_out(out)
    if p.exists() and any(p.iterdir()) and not force:
        raise CliError(f"output directory {p} is not empty; pass --force to overwrite")
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_manifest(out: Path, subcommand: str, args: dict):
    manifest = {
        "subcommand": subcommand,
        "version": advae.__version__,
        "args": {k: (str(v) if isinstance(v, Path) else v) for k, v in args.items()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _parse_attrs(text: str, names) -> np.ndarray:
    """Parse 'name=+1,name2=off' into a +-1 vector in schema order."""
    aliases = {"+1": 1, "1": 1, "on": 1, "-1": -1, "off": -1}
    values = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise CliError(f"bad attribute setting {part!r}; expected name=+1/-1/on/off")
        name, raw = part.split("=", 1)
        name = name.strip()
        if name not in names:
            raise CliError(f"unknown attribute {name!r}; schema has {list(names)}")
        if raw.strip().lower() not in aliases:
            raise CliError(f"bad attribute value {raw!r}; use +1, -1, on, or off")
        values[name] = aliases[raw.strip().lower()]
    missing = [n for n in names if n not in values]
    if missing:
        raise CliError(f"missing attribute settings for {missing}")
    return np.array([values[n] for n in names], dtype=np.int8)


def _load_image(path: str, size: int) -> np.ndarray:
    img = Image.open(path).convert("RGB")
    if img.size != (size, size):
        img = img.resize((size, size), Image.BICUBIC)
    return np.asarray(img, dtype=np.float64) / 255.0


def _load_sketch(path: str, size: int) -> np.ndarray:
    img = Image.open(path).convert("L")
    if img.size != (size, size):
        img = img.resize((size, size), Image.NEAREST)
    arr = np.asarray(img, dtype=np.float64) / 255.0
    return (arr > 0.5).astype(np.uint8)  # strokes stored as 1


def _save_image(path: Path, img: np.ndarray):
    arr = np.clip(np.asarray(img) * 255.0, 0, 255).round().astype(np.uint8)
    Image.fromarray(arr).save(path, format="PNG")


@click.group()
def main():
    """Attribute-disentangled VAE: data, training, evaluation, inference."""


@main.command("gen-data")
@click.option("--n", type=int, required=True, help="Total number of samples.")
@click.option("--seed", type=int, default=0, show_default=True, help="Master RNG seed.")
@click.option("--out", required=True, help="Output dataset directory.")
@click.option("--size", type=int, default=32, show_default=True, help="Image side length.")
@click.option("--train-frac", type=float, default=0.8, show_default=True, help="Training fraction.")
@click.option("--cv-frac", type=float, default=0.1, show_default=True, help="Cross-validation fraction.")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")
def gen_data(n, seed, out, size, train_frac, cv_frac, force):
    """Generate the procedural toy-face dataset with paired line drawings."""
    out_dir = _prepare_out(out, force)
    try:
        data_mod.build_dataset(
            n, data_mod.toy_schema(), size,
            {"train_frac": train_frac, "cv_frac": cv_frac}, seed, out_dir,
        )
    except ValueError as e:
        raise CliError(str(e))
    _write_manifest(out_dir, "gen-data", dict(n=n, seed=seed, size=size, train_frac=train_frac, cv_frac=cv_frac))
    click.echo(f"dataset written to {out_dir}")


@main.command()
@click.option("--photos", required=True, help="Directory of photo files.")
@click.option("--attrs", "attr_table", required=True, help="Delimited attribute table (first column: filename).")
@click.option("--out", required=True, help="Output dataset directory.")
@click.option("--size", type=int, default=64, show_default=True, help="Image side length after crop/resize.")
@click.option("--seed", type=int, default=0, show_default=True, help="Master RNG seed.")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")
def ingest(photos, attr_table, out, size, seed, force):
    """Ingest an external photo/attribute dataset."""
    out_dir = _prepare_out(out, force)
    header = Path(attr_table).read_text().splitlines()
    if not header:
        raise CliError("empty attribute table")
    delim = "\t" if "\t" in header[0] else ","
    names = tuple(h.strip() for h in header[0].split(delim)[1:])
    schema = data_mod.AttributeSchema(names)
    try:
        _, errors = data_mod.ingest_external(photos, attr_table, schema, size, out_dir, rng_seed=seed)
    except ValueError as e:
        raise CliError(str(e))
    for rownum, msg in errors:
        click.echo(f"row {rownum}: {msg}", err=True)
    _write_manifest(out_dir, "ingest", dict(photos=photos, attrs=attr_table, size=size, seed=seed))
    click.echo(f"dataset written to {out_dir} ({len(errors)} row errors)")


@main.command("train")
@click.option("--config", "config_path", required=True, help="RunConfig JSON file.")
@click.option("--data", "data_path", default=None, help="Dataset directory (overrides config).")
@click.option("--out", required=True, help="Run output directory.")
@click.option("--seed", type=int, default=None, help="Override the config's rng_seed.")
@click.option("--resume", "resume_from", default=None, help="Checkpoint to resume from.")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")
def train_cmd(config_path, data_path, out, seed, resume_from, force):
    """Train one of the objectives from a run-config file."""
    out_dir = _prepare_out(out, force or resume_from is not None)
    try:
        cfg = RunConfig.load(config_path)
        overrides = {}
        if data_path is not None:
            overrides["dataset"] = data_path
        if seed is not None:
            overrides["rng_seed"] = seed
        if overrides:
            cfg = RunConfig.from_dict({**cfg.to_dict(), **{k: v for k, v in overrides.items()}})
        train(cfg, out_dir, resume_from=resume_from)
    except (ValueError, FileNotFoundError) as e:
        raise CliError(str(e))
    _write_manifest(out_dir, "train", dict(config=config_path, data=data_path, seed=cfg.rng_seed, resume=resume_from))
    click.echo(f"run written to {out_dir}")


@main.command("eval")
@click.option("--ckpt", required=True, help="Checkpoint file.")
@click.option("--data", "data_path", required=True, help="Dataset directory.")
@click.option("--split", default="test", show_default=True, help="Split to evaluate.")
@click.option("--out", required=True, help="Output directory for the metric table.")
@click.option("--seed", type=int, default=0, show_default=True, help="Evaluation noise seed.")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")
def eval_cmd(ckpt, data_path, split, out, seed, force):
    """Evaluate a checkpoint on a dataset split."""
    out_dir = _prepare_out(out, force)
    try:
        model, schema, meta, _ = load_checkpoint(ckpt)
        ds = data_mod.load_dataset(data_path)
        cfg = RunConfig(
            objective=meta.get("extra_meta", {}).get("objective", "advae"),
            model=model.cfg, loss=ObjectiveConfig(alpha=schema.alpha, sigma=schema.prior_sigma),
            dataset=str(data_path), rng_seed=seed,
        )
        ev = evaluate_split(model, cfg, ds, split)
    except (ValueError, KeyError, FileNotFoundError) as e:
        raise CliError(str(e))
    rows = [
        {"attribute": name, "accuracy": float(ev["accuracy"][i])}
        for i, name in enumerate(schema.names)
    ]
    eval_mod.write_metric_table(out_dir / "accuracy.tsv", rows)
    loss = ev["loss"]
    eval_mod.write_metric_table(
        out_dir / "loss.tsv",
        [{"total": float(loss.total), "attr_kl_sum": float(np.sum(loss.attr_kl)),
          "style_kl": float(loss.style_kl), "recon_nll": float(loss.recon_nll)}],
    )
    _write_manifest(out_dir, "eval", dict(ckpt=ckpt, data=data_path, split=split, seed=seed))
    click.echo(f"metrics written to {out_dir}")


@main.command()
@click.option("--ckpt", required=True, help="Checkpoint file.")
@click.option("--data", "data_path", required=True, help="Dataset directory (base images from the test split).")
@click.option("--attr", "attr_name", required=True, help="Attribute name to traverse.")
@click.option("--grid", default="-2:2:7", show_default=True, help="Grid as lo:hi:count.")
@click.option("--index", type=int, default=0, show_default=True, help="Test-split image index.")
@click.option("--out", required=True, help="Output directory.")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")
def traverse(ckpt, data_path, attr_name, grid, index, out, force):
    """Sweep one attribute variable of an encoded image and decode a sheet."""
    out_dir = _prepare_out(out, force)
    try:
        model, schema, _, _ = load_checkpoint(ckpt)
        ds = data_mod.load_dataset(data_path)
        if attr_name not in schema.names:
            raise ValueError(f"unknown attribute {attr_name!r}")
        lo, hi, count = grid.split(":")
        g = tuple(np.linspace(float(lo), float(hi), int(count)))
        x = ds.split("test")["photos"][index]
        images = eval_mod.traverse_attribute(
            model, eval_mod.TraversalSpec(list(schema.names).index(attr_name), x, g)
        )
    except (ValueError, IndexError, FileNotFoundError) as e:
        raise CliError(str(e))
    eval_mod.image_sheet([[x] + images], out_dir / "traversal.png",
                         f"Attribute '{attr_name}' traversed over {list(g)}; first column is the input.")
    _write_manifest(out_dir, "traverse", dict(ckpt=ckpt, data=data_path, attr=attr_name, grid=grid, index=index))
    click.echo(f"traversal written to {out_dir}")


@main.command()
@click.option("--ckpt", required=True, help="Sketch-conditioned checkpoint.")
@click.option("--sketch", "sketch_path", required=True, help="Sketch image file (strokes dark).")
@click.option("--attr", "attrs", required=True, help="Comma list name=+1/-1 (aliases on/off).")
@click.option("--seed", type=int, default=0, show_default=True, help="Style seed.")
@click.option("--out", required=True, help="Output directory.")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")
def synth(ckpt, sketch_path, attrs, seed, out, force):
    """Attribute-controlled photo synthesis from a line drawing."""
    out_dir = _prepare_out(out, force)
    try:
        model, schema, _, _ = load_checkpoint(ckpt)
        y = _parse_attrs(attrs, schema.names)
        sketch = _load_sketch(sketch_path, model.cfg.image_size)
        img, z_o = eval_mod.synthesize_from_sketch(model, sketch, y, style_seed=seed)
    except (ValueError, FileNotFoundError) as e:
        raise CliError(str(e))
    _save_image(out_dir / "synth.png", img)
    (out_dir / "z_o.json").write_text(json.dumps([float(v) for v in z_o]) + "\n")
    _write_manifest(out_dir, "synth", dict(ckpt=ckpt, sketch=sketch_path, attrs=attrs, seed=seed))
    click.echo(f"synthesis written to {out_dir}")


@main.command("style-swap")
@click.option("--ckpt", required=True, help="Checkpoint file.")
@click.option("--content", "content_path", required=True, help="Content photo file.")
@click.option("--style", "style_path", required=True, help="Style photo file.")
@click.option("--content-sketch", default=None, help="Content sketch (sketch-conditioned models).")
@click.option("--out", required=True, help="Output directory.")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")
def style_swap_cmd(ckpt, content_path, style_path, content_sketch, out, force):
    """Decode content attributes with another photo's style code."""
    out_dir = _prepare_out(out, force)
    try:
        model, _, _, _ = load_checkpoint(ckpt)
        size = model.cfg.image_size
        xc = _load_image(content_path, size)
        xs = _load_image(style_path, size)
        sk = _load_sketch(content_sketch, size) if content_sketch else None
        img = eval_mod.style_swap(model, xc, xs, content_sketch=sk)
    except (ValueError, FileNotFoundError) as e:
        raise CliError(str(e))
    _save_image(out_dir / "swap.png", img)
    _write_manifest(out_dir, "style-swap", dict(ckpt=ckpt, content=content_path, style=style_path))
    click.echo(f"style swap written to {out_dir}")


@main.command()
@click.option("--ckpt-advae", required=True, help="Disentangled-model checkpoint.")
@click.option("--ckpt-acvae", required=True, help="Label-conditioned baseline checkpoint.")
@click.option("--data", "data_path", required=True, help="Dataset directory.")
@click.option("--out", required=True, help="Output directory.")
@click.option("--seed", type=int, default=0, show_default=True, help="Probe training seed.")
@click.option("--force", is_flag=True, help="Overwrite a non-empty output directory.")
def compare(ckpt_advae, ckpt_acvae, data_path, out, seed, force):
    """Side-by-side disentanglement comparison with a traversal sheet."""
    out_dir = _prepare_out(out, force)
    try:
        m_ad, schema, _, _ = load_checkpoint(ckpt_advae)
        m_ac, _, _, _ = load_checkpoint(ckpt_acvae)
        ds = data_mod.load_dataset(data_path)
        tr = ds.split("train")
        probes = eval_mod.train_probes(tr["photos"][:2000], tr["labels"][:2000], seed=seed)
        te = ds.split("test")
        table, _, _ = eval_mod.compare_baseline(
            m_ad, m_ac, te["photos"], te["labels"], probes, schema.names,
            sheet_path=out_dir / "traversals.png",
        )
    except (ValueError, FileNotFoundError) as e:
        raise CliError(str(e))
    eval_mod.write_metric_table(out_dir / "comparison.tsv", table)
    _write_manifest(out_dir, "compare", dict(ckpt_advae=ckpt_advae, ckpt_acvae=ckpt_acvae, data=data_path, seed=seed))
    click.echo(f"comparison written to {out_dir}")


@main.command()
@click.option("--ckpt", required=True, help="Checkpoint file to serve.")
@click.option("--host", default="127.0.0.1", show_default=True, help="Bind address.")
@click.option("--port", type=int, default=8000, show_default=True, help="Bind port.")
def serve(ckpt, host, port):
    """Serve the inference HTTP API over a loaded checkpoint."""
    import uvicorn

    from advae.service import create_app

    try:
        app = create_app(ckpt)
    except (ValueError, FileNotFoundError) as e:
        raise CliError(str(e))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
