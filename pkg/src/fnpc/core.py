"""Shared raster types, bounding boxes, mask algebra, and pipeline configuration.

All rasters are numpy-backed and row-major with the origin at the top-left
pixel. Bounding boxes use half-open integer coordinates [min, max), so a
one-pixel box has area 1 and width/height arithmetic needs no +1 corrections.
Instances are frozen and their arrays are marked read-only, so they can be
shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

UC_FORMULAS = ("variance", "entropy")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.setflags(write=False)
    return out


def derive_seed(base_seed: int, *keys: int) -> int:
    """Derive a reproducible 64-bit sub-seed from a base seed and integer keys.

    Used to give each slice / sample its own independent random stream while
    keeping the whole run a pure function of one top-level seed.
    """
    ss = np.random.SeedSequence([int(base_seed), *[int(k) for k in keys]])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class GrayImage2D:
    """8-bit grayscale raster with intensities in [0, 255]."""

    data: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"image must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("image must be non-empty")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError(f"image data must be integer-typed, got {arr.dtype}")
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("image intensities must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class BinaryMask2D:
    """Per-pixel {0, 1} raster."""

    data: np.ndarray  # (height, width) uint8, values 0/1

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("mask must be non-empty")
        if arr.dtype == bool:
            arr = arr.astype(np.uint8)
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError(f"mask data must be integer- or bool-typed, got {arr.dtype}")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("mask values must be strictly 0 or 1")
        object.__setattr__(self, "data", _freeze(arr.astype(np.uint8)))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def is_empty(self) -> bool:
        return not self.data.any()

    def foreground_count(self) -> int:
        return int(self.data.sum())

    @classmethod
    def zeros(cls, width: int, height: int) -> "BinaryMask2D":
        return cls(np.zeros((height, width), dtype=np.uint8))


@dataclass(frozen=True)
class ScalarMap2D:
    """Per-pixel real-valued raster (foreground frequencies, raw uncertainty)."""

    data: np.ndarray  # (height, width) float64

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"scalar map must be 2-D, got shape {arr.shape}")
        if arr.size == 0:
            raise ValueError("scalar map must be non-empty")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel rectangle, half-open: [xmin, xmax) x [ymin, ymax)."""

    xmin: int
    ymin: int
    xmax: int
    ymax: int

    def __post_init__(self):
        for name in ("xmin", "ymin", "xmax", "ymax"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)):
                raise ValueError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.xmin >= self.xmax or self.ymin >= self.ymax:
            raise ValueError(
                f"degenerate box: ({self.xmin},{self.ymin})->({self.xmax},{self.ymax})"
            )

    @property
    def width(self) -> int:
        return self.xmax - self.xmin

    @property
    def height(self) -> int:
        return self.ymax - self.ymin

    @property
    def area(self) -> int:
        return self.width * self.height

    def center(self) -> tuple[float, float]:
        return ((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    def within(self, image_width: int, image_height: int) -> bool:
        return (
            0 <= self.xmin
            and self.xmax <= image_width
            and 0 <= self.ymin
            and self.ymax <= image_height
        )

    def translated(self, dx: int, dy: int) -> "BoundingBox":
        return BoundingBox(self.xmin + dx, self.ymin + dy, self.xmax + dx, self.ymax + dy)

    def clamped(self, image_width: int, image_height: int) -> "BoundingBox":
        """Minimal translation that puts the box fully inside the image."""
        if self.width > image_width or self.height > image_height:
            raise ValueError("box larger than image; cannot clamp by translation")
        dx = max(0, -self.xmin) - max(0, self.xmax - image_width)
        dy = max(0, -self.ymin) - max(0, self.ymax - image_height)
        return self.translated(dx, dy)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.xmin, self.ymin, self.xmax, self.ymax)


@dataclass(frozen=True)
class PipelineConfig:
    """All knobs of the augmentation + correction pipeline.

    Defaults are the kidney-ultrasound settings (fine boxes): 30 sampled boxes,
    radius ratio 8, majority vote at 0.5, uncertainty ratio 0.9, correction
    intensity windows (0, 20) in the 8-bit domain, corner threshold 2 px.
    """

    n_samples: int = 30
    radius_ratio: float = 8.0
    t_ave: float = 0.5
    t_uc: float = 0.9
    t_fn_low: float = 0.0
    t_fn_high: float = 20.0
    t_fp_low: float = 0.0
    t_fp_high: float = 20.0
    t_b: int = 2
    epsilon: float = 1e-7
    uc_formula: str = "variance"
    seed: int = 0
    backend_parallelism: int = 1

    def __post_init__(self):
        if self.n_samples < 0:
            raise ValueError("n_samples must be >= 0")
        if self.radius_ratio <= 0:
            raise ValueError("radius_ratio must be > 0")
        if not 0.0 <= self.t_ave < 1.0:
            raise ValueError("t_ave must lie in [0, 1)")
        if not 0.0 <= self.t_uc <= 1.0:
            raise ValueError("t_uc must lie in [0, 1]")
        for name in ("t_fn_low", "t_fn_high", "t_fp_low", "t_fp_high"):
            v = getattr(self, name)
            if not 0.0 <= v <= 255.0:
                raise ValueError(f"{name} must lie in [0, 255]")
        if self.t_fn_low >= self.t_fn_high:
            raise ValueError("t_fn_low must be < t_fn_high")
        if self.t_fp_low >= self.t_fp_high:
            raise ValueError("t_fp_low must be < t_fp_high")
        if self.t_b < 0:
            raise ValueError("t_b must be >= 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.uc_formula not in UC_FORMULAS:
            raise ValueError(f"uc_formula must be one of {UC_FORMULAS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.backend_parallelism < 1:
            raise ValueError("backend_parallelism must be >= 1")


def _check_slices(slices, kind):
    if len(slices) < 1:
        raise ValueError("volume needs at least one slice")
    w, h = slices[0].width, slices[0].height
    for i, s in enumerate(slices):
        if not isinstance(s, kind):
            raise ValueError(f"slice {i} is not a {kind.__name__}")
        if s.width != w or s.height != h:
            raise ValueError(
                f"slice {i} is {s.width}x{s.height}, expected {w}x{h}"
            )


@dataclass(frozen=True)
class GrayVolume3D:
    """Ordered stack of same-sized grayscale slices."""

    slices: tuple[GrayImage2D, ...]

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        _check_slices(self.slices, GrayImage2D)

    @property
    def slice_count(self) -> int:
        return len(self.slices)

    @property
    def width(self) -> int:
        return self.slices[0].width

    @property
    def height(self) -> int:
        return self.slices[0].height

    def __getitem__(self, i: int) -> GrayImage2D:
        return self.slices[i]

    def to_array(self) -> np.ndarray:
        return np.stack([s.data for s in self.slices])


@dataclass(frozen=True)
class MaskVolume3D:
    """Ordered stack of same-sized binary mask slices."""

    slices: tuple[BinaryMask2D, ...]

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        _check_slices(self.slices, BinaryMask2D)

    @property
    def slice_count(self) -> int:
        return len(self.slices)

    @property
    def width(self) -> int:
        return self.slices[0].width

    @property
    def height(self) -> int:
        return self.slices[0].height

    def __getitem__(self, i: int) -> BinaryMask2D:
        return self.slices[i]

    def to_array(self) -> np.ndarray:
        return np.stack([s.data for s in self.slices])


def _check_same_dims(a, b):
    if a.data.shape != b.data.shape:
        raise ValueError(f"dimension mismatch: {a.data.shape} vs {b.data.shape}")


def mask_and(a: BinaryMask2D, b: BinaryMask2D) -> BinaryMask2D:
    """Per-pixel logical AND."""
    _check_same_dims(a, b)
    return BinaryMask2D(a.data & b.data)


def mask_or(a: BinaryMask2D, b: BinaryMask2D) -> BinaryMask2D:
    """Per-pixel logical OR."""
    _check_same_dims(a, b)
    return BinaryMask2D(a.data | b.data)


def mask_not(a: BinaryMask2D) -> BinaryMask2D:
    """Per-pixel complement."""
    return BinaryMask2D(1 - a.data)


def mask_diff(a: BinaryMask2D, b: BinaryMask2D) -> BinaryMask2D:
    """Set difference: pixels in a and not in b."""
    _check_same_dims(a, b)
    return BinaryMask2D(a.data & (1 - b.data))
