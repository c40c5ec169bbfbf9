"""Aggregation of prompt-augmented prediction ensembles.

Turns the N+1 masks from jittered prompts into a foreground-frequency map,
a majority-vote mask, a per-pixel aleatoric uncertainty map, and the
thresholded high-uncertainty mask. All thresholds are strict inequalities.
"""

from __future__ import annotations

import numpy as np

from .core import UC_FORMULAS, BinaryMask2D, ScalarMap2D


def frequency_map(masks: list[BinaryMask2D]) -> ScalarMap2D:
    """Per-pixel foreground frequency over an ensemble of masks.

    With n masks, values are exact float64 quotients k/n for integer counts k,
    so each pixel's value lies on the grid {0, 1/n, ..., 1}.
    """
    if len(masks) == 0:
        raise ValueError("frequency_map needs at least one mask")
    shape = masks[0].data.shape
    for i, m in enumerate(masks):
        if m.data.shape != shape:
            raise ValueError(
                f"mask {i} has shape {m.data.shape}, expected {shape}"
            )
    counts = np.zeros(shape, dtype=np.int64)
    for m in masks:
        counts += m.data
    return ScalarMap2D(counts.astype(np.float64) / float(len(masks)))


def _check_frequencies(f: ScalarMap2D) -> None:
    if f.data.min() < 0.0 or f.data.max() > 1.0:
        raise ValueError("frequency values must lie in [0, 1]")


def majority_mask(f: ScalarMap2D, t_ave: float) -> BinaryMask2D:
    """Vote threshold: pixel is foreground iff f > t_ave (strict).

    t_ave = 0 gives union semantics: any single vote sets the pixel.
    """
    if not 0.0 <= t_ave < 1.0:
        raise ValueError("t_ave must lie in [0, 1)")
    _check_frequencies(f)
    return BinaryMask2D((f.data > t_ave).astype(np.uint8))


def uncertainty_raw(f: ScalarMap2D, formula: str = "variance", epsilon: float = 1e-7) -> ScalarMap2D:
    """Per-pixel aleatoric uncertainty from the foreground frequency.

    variance: f * (1 - f), range [0, 0.25].
    entropy:  -0.5 * (f * ln(f + epsilon) + (1 - f) * ln(1 - f + epsilon)),
    natural log, clamped below at 0. The clamp exists because epsilon inside
    the logarithm makes the expression slightly negative (about -5e-8) at
    f in {0, 1}, and an uncertainty must be nonnegative. Both formulas are
    symmetric under f -> 1 - f and strictly increasing in min(f, 1 - f), so
    they rank pixels identically; the log base only rescales the entropy
    form, which the min-max threshold in `uncertainty_mask` absorbs.
    """
    if formula not in UC_FORMULAS:
        raise ValueError(f"formula must be one of {UC_FORMULAS}")
    _check_frequencies(f)
    data = f.data
    if formula == "variance":
        uc = data * (1.0 - data)
    else:
        uc = -0.5 * (
            data * np.log(data + epsilon) + (1.0 - data) * np.log(1.0 - data + epsilon)
        )
        uc = np.maximum(uc, 0.0)
    return ScalarMap2D(uc)


def uncertainty_mask(uc_raw: ScalarMap2D, t_uc: float) -> BinaryMask2D:
    """High-uncertainty pixels via a min-max interpolated threshold.

    Pixel set iff uc_raw - lo > t_uc * (hi - lo), strict, where lo and hi are
    the map minimum and maximum. A constant map has no pixel strictly above
    its own minimum, so the result is all-zero. The difference form (rather
    than comparing against lo + t_uc * (hi - lo)) keeps the endpoints exact
    under positive rescaling of the map: at t_uc = 1 no pixel ever exceeds
    hi - lo, whereas the rounded sum lo + (hi - lo) can land below hi and
    leak the maximum pixel in for some scales.
    """
    if not 0.0 <= t_uc <= 1.0:
        raise ValueError("t_uc must lie in [0, 1]")
    data = uc_raw.data
    lo = data.min()
    hi = data.max()
    if hi == lo:
        return BinaryMask2D(np.zeros(data.shape, dtype=np.uint8))
    return BinaryMask2D((data - lo > t_uc * (hi - lo)).astype(np.uint8))
