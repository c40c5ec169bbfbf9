"""The HTTP surface: POST /segment and GET /health.

Wire protocol:
  POST /segment  {"image_png_b64": <b64 8-bit grayscale PNG>,
                  "box": [xmin, ymin, xmax, ymax]}   (half-open pixel coords)
  -> 200 {"mask_png_b64": <b64 8-bit grayscale PNG, values 0/255, same dims>}
  -> 400 malformed body, 422 box out of bounds, 500 model failure
  GET /health -> 200 {"status": "ok", "model": <name>}

The request body is parsed by hand instead of through a pydantic model so
malformed input maps to 400 (framework validation would answer 422, which
this protocol reserves for out-of-bounds boxes).
"""

from __future__ import annotations

import base64
import io

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image

from .model import SegmentationModel


def _decode_image(b64: str) -> np.ndarray:
    raw = base64.b64decode(b64, validate=True)
    with Image.open(io.BytesIO(raw)) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


def _encode_mask(mask: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(mask, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _parse_box(value) -> tuple[int, int, int, int]:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ValueError("box must be a 4-element array")
    coords = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError("box coordinates must be numbers")
        if isinstance(v, float) and not v.is_integer():
            raise ValueError("box coordinates must be integral")
        coords.append(int(v))
    return tuple(coords)


def create_app(model: SegmentationModel) -> FastAPI:
    app = FastAPI(title="sam-adapter", docs_url=None, redoc_url=None)

    @app.get("/health")
    async def health():
        return {"status": "ok", "model": model.name}

    @app.post("/segment")
    async def segment(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "body is not valid JSON"}, status_code=400)
        if not isinstance(body, dict):
            return JSONResponse({"error": "body must be a JSON object"}, status_code=400)
        try:
            image = _decode_image(body["image_png_b64"])
            box = _parse_box(body["box"])
        except (KeyError, TypeError, ValueError) as e:
            return JSONResponse({"error": f"malformed body: {e}"}, status_code=400)
        except Exception:
            return JSONResponse({"error": "image is not a decodable PNG"}, status_code=400)
        h, w = image.shape
        xmin, ymin, xmax, ymax = box
        if not (0 <= xmin < xmax <= w and 0 <= ymin < ymax <= h):
            return JSONResponse(
                {"error": f"box {list(box)} out of bounds for {w}x{h}"},
                status_code=422,
            )
        try:
            mask = model.segment(image, box)
        except Exception as e:
            return JSONResponse({"error": f"model failure: {e}"}, status_code=500)
        return {"mask_png_b64": _encode_mask(mask)}

    return app
