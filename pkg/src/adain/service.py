"""HTTP stylization service.

Synchronous request/response over multipart forms; PNG out. Styles can
be uploaded once (``POST /api/styles``) and referenced by content-hash
id afterwards, which skips re-encoding per the encode-once serving
model. Responses are a pure function of (weights, request): the style
cache is content-addressed, so a hit and a re-upload produce identical
pixels.
"""

import hashlib
import json
import threading
from collections import OrderedDict

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse, Response

from .controls import WEIGHT_SUM_TOL, ControlSpec, stylize
from .errors import ConfigError, DimensionError, RegionOverlapError
from .images import image_to_png_bytes, load_image_bytes, load_mask
from .model import encode_style

MAX_UPLOAD_BYTES = 16 * 1024 * 1024


class StyleCache:
    """Content-addressed LRU of style descriptors; safe across workers."""

    def __init__(self, capacity=256):
        self.capacity = capacity
        self._entries = OrderedDict()
        self._lock = threading.Lock()

    def put(self, style_id, descriptor):
        with self._lock:
            self._entries[style_id] = descriptor
            self._entries.move_to_end(style_id)
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)

    def get(self, style_id):
        with self._lock:
            descriptor = self._entries.get(style_id)
            if descriptor is not None:
                self._entries.move_to_end(style_id)
            return descriptor


def _bad_request(field, message):
    return HTTPException(status_code=400, detail={"field": field, "error": message})


def create_app(model, eps=1e-5, max_dim=1024, cache_size=256):
    app = FastAPI(title="adain-service")
    cache = StyleCache(capacity=cache_size)

    def decode_upload(blob, field):
        if len(blob) > MAX_UPLOAD_BYTES:
            raise HTTPException(status_code=413, detail={"field": field, "error": "upload exceeds 16 MB"})
        try:
            img = load_image_bytes(blob)
        except Exception as exc:
            raise _bad_request(field, f"undecodable image: {exc}") from exc
        h, w = img.data.shape[2:]
        if h > max_dim or w > max_dim:
            raise HTTPException(
                status_code=413, detail={"field": field, "error": f"{h}x{w} exceeds max dimension {max_dim}"}
            )
        return img

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "model_loaded": model is not None,
            "eps": eps,
            "encoder_taps": list(model.loss_taps),
        }

    @app.post("/api/styles")
    def register_style(style: UploadFile = File(...)):
        blob = style.file.read()
        img = decode_upload(blob, "style")
        style_id = hashlib.sha256(blob).hexdigest()
        if cache.get(style_id) is None:
            cache.put(style_id, encode_style(model, img))
        return {"style_id": style_id}

    @app.post("/api/stylize")
    def stylize_endpoint(
        content: UploadFile = File(...),
        styles: list[UploadFile] = File(default=[]),
        style_ids: list[str] = Form(default=[]),
        weights: list[float] = Form(default=[]),
        alpha: float = Form(default=1.0),
        preserve_color: bool = Form(default=False),
        masks: list[UploadFile] = File(default=[]),
    ):
        content_img = decode_upload(content.file.read(), "content")
        if content_img.data.shape[2] < model.encoder.min_input or content_img.data.shape[3] < model.encoder.min_input:
            raise HTTPException(
                status_code=422,
                detail={"field": "content", "error": f"image smaller than encoder minimum {model.encoder.min_input}"},
            )

        style_inputs = []
        for upload in styles:
            style_inputs.append(decode_upload(upload.file.read(), "styles"))
        for style_id in style_ids:
            descriptor = cache.get(style_id)
            if descriptor is None:
                raise HTTPException(status_code=404, detail={"field": "style_ids", "error": f"unknown style_id {style_id}"})
            style_inputs.append(descriptor)
        if not style_inputs:
            raise _bad_request("styles", "at least one style or style_id is required")

        if weights and len(weights) != len(style_inputs):
            raise _bad_request("weights", f"{len(weights)} weights for {len(style_inputs)} styles")
        if not weights:
            weights = [1.0 / len(style_inputs)] * len(style_inputs)
        total = sum(weights)
        if any(w < 0 for w in weights):
            raise _bad_request("weights", f"weights must be >= 0, got {weights}")
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise _bad_request("weights", f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got sum {total}")
        if not 0.0 <= alpha <= 1.0:
            raise _bad_request("alpha", f"alpha must lie in [0,1], got {alpha}")

        mask_arrays = None
        if masks:
            if len(masks) != len(style_inputs):
                raise _bad_request("masks", f"{len(masks)} masks for {len(style_inputs)} styles; they pair 1:1")
            mask_arrays = []
            for upload in masks:
                blob = upload.file.read()
                try:
                    mask_arrays.append(load_mask(blob))
                except Exception as exc:
                    raise _bad_request("masks", f"undecodable mask: {exc}") from exc

        spec = ControlSpec(
            styles=list(zip(style_inputs, weights)),
            alpha=alpha,
            masks=mask_arrays,
            preserve_color=preserve_color,
        )
        try:
            out = stylize(model, content_img, spec)
        except RegionOverlapError as exc:
            raise _bad_request("masks", str(exc)) from exc
        except ConfigError as exc:
            raise _bad_request("controls", str(exc)) from exc
        except DimensionError as exc:
            raise HTTPException(status_code=422, detail={"field": "content", "error": str(exc)}) from exc

        return Response(
            content=image_to_png_bytes(out),
            media_type="image/png",
            headers={"X-Control-Spec": json.dumps(spec.describe())},
        )

    @app.exception_handler(HTTPException)
    async def structured_errors(_request, exc):
        detail = exc.detail if isinstance(exc.detail, dict) else {"error": str(exc.detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    return app


def run_server(weights_path, port=8080, eps=1e-5, max_dim=1024, cache_size=256):
    import uvicorn

    from .model import build_model, model_from_bundle
    from .weights import load_weights

    if weights_path in (None, "tiny"):
        model = build_model("tiny", eps=eps)
    else:
        model = model_from_bundle(load_weights(weights_path))
    app = create_app(model, eps=eps, max_dim=max_dim, cache_size=cache_size)
    uvicorn.run(app, host="0.0.0.0", port=port)
