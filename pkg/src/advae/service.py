"""Stateless HTTP inference service over a loaded checkpoint.

Images cross the wire as base64 PNG inside JSON; lossy input formats are
rejected so round trips stay bit-exact. Style pinning works by returning
the z_o actually used, which the client resubmits verbatim.
"""

from __future__ import annotations

import base64
import io
import logging
import time

import numpy as np
from fastapi import Body, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image

from advae.evaluation import (
    TraversalSpec,
    mean_reconstruction,
    style_swap,
    synthesize_from_sketch,
    traverse_attribute,
)
from advae.networks import load_checkpoint

log = logging.getLogger("advae.service")

MAX_GRID = 16

_LOSSLESS_FORMATS = {"PNG", "BMP", "PPM", "TIFF"}


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message


class InferenceSession:
    """Immutable bundle of model, schema, and identifier; requests never
    mutate it, so concurrent handlers are safe."""

    def __init__(self, checkpoint_path):
        model, schema, meta, _ = load_checkpoint(checkpoint_path)
        model.eval()
        for p in model.parameters():
            p.requires_grad_(False)
        self.model = model
        self.schema = schema
        self.identifier = f"{meta['magic']}-step{meta['step']}"

    def schema_doc(self):
        return {
            "attributes": list(self.schema.names),
            "attribute_count": self.model.cfg.attribute_count,
            "style_dim": self.model.cfg.style_dim,
            "image_size": self.model.cfg.image_size,
            "with_sketch": self.model.cfg.with_sketch,
            "model_id": self.identifier,
        }


def _decode_image(b64: str, size: int, mode: str) -> np.ndarray:
    try:
        raw = base64.b64decode(b64, validate=True)
        img = Image.open(io.BytesIO(raw))
        fmt = img.format
        img.load()
    except Exception:
        raise ApiError(422, "image payload is not a decodable image")
    if fmt not in _LOSSLESS_FORMATS:
        raise ApiError(422, f"lossy or unsupported image format {fmt}; send a lossless raster (PNG)")
    if mode == "sketch":
        arr = np.asarray(img.convert("L"), dtype=np.float64) / 255.0
        if arr.shape != (size, size):
            img2 = img.convert("L").resize((size, size), Image.NEAREST)
            arr = np.asarray(img2, dtype=np.float64) / 255.0
        return (arr > 0.5).astype(np.uint8)
    arr_img = img.convert("RGB")
    if arr_img.size != (size, size):
        arr_img = arr_img.resize((size, size), Image.BICUBIC)
    return np.asarray(arr_img, dtype=np.float64) / 255.0


def _encode_image(img: np.ndarray) -> str:
    arr = np.clip(np.asarray(img) * 255.0, 0, 255).round().astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _require(body: dict, key: str):
    if key not in body or body[key] is None:
        raise ApiError(400, f"missing required field {key!r}")
    return body[key]


def _parse_attributes(body: dict, schema) -> np.ndarray:
    attrs = _require(body, "attributes")
    if not isinstance(attrs, dict):
        raise ApiError(400, "attributes must be an object of name -> -1/+1")
    unknown = set(attrs) - set(schema.names)
    if unknown:
        raise ApiError(400, f"unknown attributes {sorted(unknown)}")
    missing = [n for n in schema.names if n not in attrs]
    if missing:
        raise ApiError(400, f"missing attributes {missing}")
    vals = []
    for n in schema.names:
        v = attrs[n]
        if v not in (-1, 1):
            raise ApiError(400, f"attribute {n!r} must be -1 or +1")
        vals.append(v)
    return np.array(vals, dtype=np.int8)


def create_app(checkpoint_path=None) -> FastAPI:
    app = FastAPI(title="advae inference service")
    app.state.session = InferenceSession(checkpoint_path) if checkpoint_path else None

    @app.exception_handler(ApiError)
    async def _api_error(request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"error": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request, exc):
        return JSONResponse(status_code=400, content={"error": "malformed request body"})

    @app.middleware("http")
    async def _access_log(request: Request, call_next):
        t0 = time.monotonic()
        response = await call_next(request)
        log.info(
            "%s %s %s %d %.1fms",
            time.strftime("%Y-%m-%dT%H:%M:%S"),
            request.method,
            request.url.path,
            response.status_code,
            (time.monotonic() - t0) * 1e3,
        )
        return response

    def session() -> InferenceSession:
        if app.state.session is None:
            raise ApiError(503, "model not loaded")
        return app.state.session

    @app.get("/v1/schema")
    def get_schema():
        return session().schema_doc()

    @app.post("/v1/synthesize")
    def post_synthesize(body: dict = Body(...)):
        ses = session()
        if not ses.model.cfg.with_sketch:
            raise ApiError(400, "loaded model has no sketch channel")
        sketch = _decode_image(_require(body, "sketch"), ses.model.cfg.image_size, "sketch")
        y = _parse_attributes(body, ses.schema)
        z_o = body.get("z_o")
        style_seed = body.get("style_seed")
        if z_o is not None:
            z_o = np.asarray(z_o, dtype=np.float64)
            if z_o.shape != (ses.model.cfg.style_dim,):
                raise ApiError(400, f"z_o must have length {ses.model.cfg.style_dim}")
        elif style_seed is None:
            style_seed = 0
        try:
            img, z_used = synthesize_from_sketch(ses.model, sketch, y, style_seed=style_seed, z_o=z_o)
        except ValueError as e:
            raise ApiError(400, str(e))
        return {"image": _encode_image(img), "z_o": [float(v) for v in z_used]}

    @app.post("/v1/traverse")
    def post_traverse(body: dict = Body(...)):
        ses = session()
        name = _require(body, "attribute")
        if name not in ses.schema.names:
            raise ApiError(400, f"unknown attribute {name!r}")
        grid = _require(body, "grid")
        if not isinstance(grid, list) or not grid:
            raise ApiError(400, "grid must be a non-empty list of numbers")
        if len(grid) > MAX_GRID:
            raise ApiError(400, f"grid length capped at {MAX_GRID}")
        index = list(ses.schema.names).index(name)
        size = ses.model.cfg.image_size
        if body.get("image") is not None:
            base = _decode_image(body["image"], size, "photo")
        elif body.get("sketch") is not None:
            sketch = _decode_image(body["sketch"], size, "sketch")
            y = _parse_attributes(body, ses.schema)
            base, _ = synthesize_from_sketch(
                ses.model, sketch, y, style_seed=body.get("style_seed", 0)
            )
        else:
            raise ApiError(400, "provide either image or sketch+attributes")
        try:
            images = traverse_attribute(ses.model, TraversalSpec(index, base, tuple(grid)))
        except ValueError as e:
            raise ApiError(400, str(e))
        return {"images": [_encode_image(im) for im in images]}

    @app.post("/v1/style-swap")
    def post_style_swap(body: dict = Body(...)):
        ses = session()
        size = ses.model.cfg.image_size
        content = _decode_image(_require(body, "content"), size, "photo")
        style = _decode_image(_require(body, "style"), size, "photo")
        sketch = None
        if ses.model.cfg.with_sketch:
            sketch = _decode_image(_require(body, "content_sketch"), size, "sketch")
        try:
            img = style_swap(ses.model, content, style, content_sketch=sketch)
        except ValueError as e:
            raise ApiError(400, str(e))
        return {"image": _encode_image(img)}

    @app.post("/v1/reconstruct")
    def post_reconstruct(body: dict = Body(...)):
        # convenience endpoint used by the UI to preview an upload
        ses = session()
        img = _decode_image(_require(body, "image"), ses.model.cfg.image_size, "photo")
        return {"image": _encode_image(mean_reconstruction(ses.model, img))}

    return app
