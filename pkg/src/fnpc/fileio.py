"""PNG raster I/O, raw float maps, volume manifests, and overlay rendering.

All rasters travel as 8-bit grayscale PNG (masks as 0/255). Volumes are a
JSON manifest naming ordered slice PNGs of identical dimensions; the manifest
is validated in full before any pipeline work starts.
"""

from __future__ import annotations

import io
import json
import os

import numpy as np
from PIL import Image

from .core import BinaryMask2D, GrayImage2D, GrayVolume3D, ScalarMap2D


class ManifestError(ValueError):
    """Volume or dataset manifest is malformed or inconsistent with disk."""


def gray_to_png_bytes(arr: np.ndarray) -> bytes:
    """Encode a 2-D uint8 array as grayscale PNG bytes."""
    arr = np.asarray(arr)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise ValueError(f"expected 2-D uint8 array, got {arr.dtype} {arr.shape}")
    buf = io.BytesIO()
    Image.fromarray(arr, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def png_bytes_to_gray(data: bytes) -> np.ndarray:
    """Decode PNG bytes to a 2-D uint8 array (converted to grayscale)."""
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def load_gray_png(path: str) -> GrayImage2D:
    """Load a PNG file as an 8-bit grayscale image."""
    with Image.open(path) as im:
        return GrayImage2D(np.asarray(im.convert("L"), dtype=np.uint8))


def save_gray_png(image: GrayImage2D, path: str) -> None:
    Image.fromarray(image.data, mode="L").save(path, format="PNG")


def load_mask_png(path: str) -> BinaryMask2D:
    """Load a PNG file as a binary mask; any nonzero pixel counts as foreground."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return BinaryMask2D((arr != 0).astype(np.uint8))


def save_mask_png(mask: BinaryMask2D, path: str) -> None:
    """Write a mask as a 0/255 grayscale PNG."""
    Image.fromarray(mask.data * np.uint8(255), mode="L").save(path, format="PNG")


def mask_to_png_bytes(mask: BinaryMask2D) -> bytes:
    return gray_to_png_bytes(mask.data * np.uint8(255))


def save_f32_map(smap: ScalarMap2D, path: str) -> None:
    """Write a scalar map as row-major little-endian 32-bit floats.

    Dimensions are not stored in the file; callers record them in a sidecar
    (result.json carries width/height for uc_raw.f32).
    """
    with open(path, "wb") as fh:
        fh.write(smap.data.astype("<f4").tobytes(order="C"))


def scaled_uc_png(smap: ScalarMap2D) -> GrayImage2D:
    """Min-max scale a scalar map to [0, 255] for a viewable PNG.

    A constant map renders as all-zero. Scaling is for display only; the
    lossless values live in the .f32 artifact.
    """
    data = smap.data
    lo = float(data.min())
    hi = float(data.max())
    if hi == lo:
        return GrayImage2D(np.zeros(data.shape, dtype=np.uint8))
    scaled = np.rint((data - lo) / (hi - lo) * 255.0)
    return GrayImage2D(scaled.astype(np.uint8))


def load_volume_manifest(path: str) -> GrayVolume3D:
    """Load a volume manifest and every slice it names, validating fully.

    Manifest format (JSON): {"width": W, "height": H, "slice_count": N,
    "slices": [relative or absolute PNG paths, bottom slice first]}.

    Raises ManifestError on any inconsistency (count mismatch, missing file,
    wrong dimensions) before returning, so callers can fail fast.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest {path} is not valid JSON: {e}") from e
    for key in ("width", "height", "slice_count", "slices"):
        if key not in meta:
            raise ManifestError(f"manifest {path} lacks required key {key!r}")
    width, height = int(meta["width"]), int(meta["height"])
    names = list(meta["slices"])
    if len(names) != int(meta["slice_count"]):
        raise ManifestError(
            f"manifest {path} lists {len(names)} slices but declares slice_count="
            f"{meta['slice_count']}"
        )
    if not names:
        raise ManifestError(f"manifest {path} names no slices")
    base = os.path.dirname(os.path.abspath(path))
    slices = []
    for name in names:
        spath = name if os.path.isabs(name) else os.path.join(base, name)
        if not os.path.isfile(spath):
            raise ManifestError(f"manifest slice missing on disk: {spath}")
        img = load_gray_png(spath)
        if img.width != width or img.height != height:
            raise ManifestError(
                f"slice {spath} is {img.width}x{img.height}, manifest says {width}x{height}"
            )
        slices.append(img)
    return GrayVolume3D(tuple(slices))


def write_volume_manifest(volume: GrayVolume3D, out_dir: str, prefix: str = "slice") -> str:
    """Write a volume as slice PNGs plus manifest.json; returns manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    names = []
    for i, sl in enumerate(volume.slices):
        name = f"{prefix}_{i:04d}.png"
        save_gray_png(sl, os.path.join(out_dir, name))
        names.append(name)
    meta = {
        "width": volume.width,
        "height": volume.height,
        "slice_count": volume.slice_count,
        "slices": names,
    }
    mpath = os.path.join(out_dir, "manifest.json")
    with open(mpath, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return mpath


def render_overlay(image: GrayImage2D, m_ave, m_fnpc, box=None) -> np.ndarray:
    """Compose an RGB overlay: image, mask boundaries, and the prompt box.

    m_ave boundary in blue, m_fnpc boundary in red, box edges in green.
    Returns an (H, W, 3) uint8 array.
    """
    from .metrics import boundary

    rgb = np.stack([image.data] * 3, axis=2).astype(np.uint8)
    if m_ave is not None and not m_ave.is_empty:
        b = boundary(m_ave).data.astype(bool)
        rgb[b] = (64, 128, 255)
    if m_fnpc is not None and not m_fnpc.is_empty:
        b = boundary(m_fnpc).data.astype(bool)
        rgb[b] = (255, 64, 64)
    if box is not None:
        x0, y0, x1, y1 = box.as_tuple()
        rgb[y0, x0:x1] = (64, 255, 64)
        rgb[y1 - 1, x0:x1] = (64, 255, 64)
        rgb[y0:y1, x0] = (64, 255, 64)
        rgb[y0:y1, x1 - 1] = (64, 255, 64)
    return rgb


def save_rgb_png(rgb: np.ndarray, path: str) -> None:
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")
