"""HTTP service: synchronous matting over JSON.

Endpoints:
  GET  /v1/health  -> {"status": "ok", "version": ...}
  GET  /v1/config  -> effective engine configuration
  POST /v1/matte   -> {"alpha": <b64 16-bit PNG>, "latent_f": int,
                       "timing_ms": float, "uncertainty"?, "boxes"?}

Errors: 400 malformed request or conflicting guidance kinds, 413
oversize, 422 invalid guidance content, 500 internal with an opaque id.
Requests share one stateless engine; identical (image, seed, options)
give byte-identical alpha payloads.
"""

import base64
import binascii
import logging
import time
import uuid

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from genmatte import imgio
from genmatte.engine import SPATIAL_GUIDE_KINDS, MattingEngine
from genmatte.errors import (ConfigError, FormatError, GenmatteError, ShapeError,
                             ValidationError)

VERSION = "0.1.0"
DEFAULT_MAX_REQUEST_BYTES = 32 * 1024 * 1024

log = logging.getLogger("genmatte.service")


class _BadRequest(Exception):
    pass


def _require(cond, message):
    if not cond:
        raise _BadRequest(message)


def _decode_b64(field, value):
    _require(isinstance(value, str), f"{field} must be a base64 string")
    try:
        return base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError):
        raise _BadRequest(f"{field} is not valid base64")


def _parse_guidance(engine, payload):
    _require(isinstance(payload, dict), "guidance must be an object")
    allowed = set(SPATIAL_GUIDE_KINDS) | {"prompt", "literal", "band"}
    unknown = set(payload) - allowed
    _require(not unknown, f"unknown guidance keys {sorted(unknown)}")
    spatial = [k for k in SPATIAL_GUIDE_KINDS if k in payload]
    _require(len(spatial) <= 1,
             f"conflicting spatial guidance kinds {spatial}; provide exactly one")
    guidance = None
    if spatial:
        kind = spatial[0]
        if kind == "scribbles":
            _require(isinstance(payload[kind], dict), "scribbles must be an object")
            guidance = {"scribbles": payload[kind]}
        else:
            img = imgio.load_image(_decode_b64(kind, payload[kind]))
            guidance = {kind: img}
        if "literal" in payload:
            _require(isinstance(payload["literal"], bool), "literal must be a boolean")
            guidance["literal"] = payload["literal"]
        if "band" in payload:
            _require(isinstance(payload["band"], int), "band must be an integer")
            guidance["band"] = payload["band"]
    prompt = payload.get("prompt")
    if prompt is not None:
        _require(isinstance(prompt, str), "prompt must be a string")
    return guidance, prompt


def create_app(engine: MattingEngine,
               max_request_bytes: int = DEFAULT_MAX_REQUEST_BYTES) -> FastAPI:
    app = FastAPI(title="genmatte", version=VERSION, docs_url=None, redoc_url=None)

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": VERSION}

    @app.get("/v1/config")
    def config():
        return engine.config.to_dict()

    @app.post("/v1/matte")
    async def matte(request: Request):
        body = await request.body()
        if len(body) > max_request_bytes:
            return JSONResponse({"error": "request too large"}, status_code=413)
        t0 = time.perf_counter()
        try:
            payload = _parse_request(body)
            image, options = payload
            result = engine.matte(image, **options)
        except _BadRequest as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        except (ValidationError, ConfigError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        except (FormatError, ShapeError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        except GenmatteError:
            return _internal_error()
        except Exception:  # service boundary: everything else becomes a 500
            return _internal_error()
        alpha_png = imgio.encode_png_bytes(result.matte, bit_depth=16)
        response = {
            "alpha": base64.b64encode(alpha_png).decode("ascii"),
            "latent_f": result.latent_f,
            "timing_ms": (time.perf_counter() - t0) * 1000.0,
        }
        if options.get("diagnostics"):
            if result.uncertainty is not None:
                u_png = imgio.encode_png_bytes(
                    np.clip(result.uncertainty.grid, 0.0, 1.0), bit_depth=16)
                response["uncertainty"] = base64.b64encode(u_png).decode("ascii")
            response["boxes"] = [b.to_dict() for b in result.plan.boxes]
        return JSONResponse(response)

    def _parse_request(body: bytes):
        import json

        try:
            data = json.loads(body)
        except json.JSONDecodeError:
            raise _BadRequest("request body is not valid JSON")
        _require(isinstance(data, dict), "request body must be a JSON object")
        allowed = {"image", "guidance", "seed", "hr", "diagnostics", "steps", "eta",
                   "seeds"}
        unknown = set(data) - allowed
        _require(not unknown, f"unknown request fields {sorted(unknown)}")
        _require("image" in data, "missing required field 'image'")
        image = imgio.load_image(_decode_b64("image", data["image"]))
        options = {}
        guidance, prompt = (None, None)
        if data.get("guidance") is not None:
            guidance, prompt = _parse_guidance(engine, data["guidance"])
        for key, typ in (("seed", int), ("steps", int), ("seeds", int)):
            if data.get(key) is not None:
                _require(isinstance(data[key], int) and not isinstance(data[key], bool),
                         f"{key} must be an integer")
        for key in ("hr", "diagnostics"):
            if data.get(key) is not None:
                _require(isinstance(data[key], bool), f"{key} must be a boolean")
        if data.get("eta") is not None:
            _require(isinstance(data["eta"], (int, float)) and not isinstance(data["eta"], bool),
                     "eta must be a number")
            options["eta"] = float(data["eta"])
        options["seed"] = data.get("seed", 0)
        options["hr"] = data.get("hr", False)
        options["diagnostics"] = data.get("diagnostics", False)
        if data.get("steps") is not None:
            options["steps"] = data["steps"]
        if data.get("seeds") is not None:
            options["ensemble"] = data["seeds"]
        options["guidance"] = guidance
        options["prompt"] = prompt
        return image, options

    def _internal_error():
        error_id = uuid.uuid4().hex
        log.exception("internal error id=%s", error_id)
        return JSONResponse({"error": "internal error", "id": error_id}, status_code=500)

    return app
