"""False-negative / false-positive correction and the 2-D pipeline driver.

The majority-vote mask is repaired in two moves over the high-uncertainty
region: uncertain pixels outside the vote whose intensity falls strictly
inside the FN window are added back, and uncertain pixels inside the vote
whose intensity falls strictly outside the FP window are removed. The driver
`run_fnpc_2d` chains box sampling, backend calls, ensemble aggregation, and
correction into one deterministic run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    BinaryMask2D,
    BoundingBox,
    GrayImage2D,
    PipelineConfig,
    ScalarMap2D,
    mask_diff,
    mask_or,
)
from .ensemble import frequency_map, majority_mask, uncertainty_mask, uncertainty_raw
from .sampler import sample_boxes
from .segmenter import BackendError, SegmenterBackend


def _check_dims(image: GrayImage2D, *masks: BinaryMask2D) -> None:
    for m in masks:
        if m.data.shape != image.data.shape:
            raise ValueError(
                f"mask shape {m.data.shape} does not match image {image.data.shape}"
            )


def false_negative_mask(
    image: GrayImage2D,
    m_ave: BinaryMask2D,
    uc_mask: BinaryMask2D,
    t_fn_low: float,
    t_fn_high: float,
) -> BinaryMask2D:
    """Uncertain non-vote pixels whose intensity sits strictly inside the FN window.

    Pixel set iff uc_mask = 1 and m_ave = 0 and t_fn_low < I < t_fn_high.
    The intensity test runs on the original image values restricted to that
    support, so masked-out pixels never contribute spurious zeros.
    """
    if t_fn_low >= t_fn_high:
        raise ValueError("t_fn_low must be < t_fn_high")
    _check_dims(image, m_ave, uc_mask)
    support = (uc_mask.data == 1) & (m_ave.data == 0)
    intensity = image.data
    window = (intensity > t_fn_low) & (intensity < t_fn_high)
    return BinaryMask2D((support & window).astype(np.uint8))


def false_positive_mask(
    image: GrayImage2D,
    m_ave: BinaryMask2D,
    uc_mask: BinaryMask2D,
    t_fp_low: float,
    t_fp_high: float,
) -> BinaryMask2D:
    """Uncertain vote pixels whose intensity sits strictly outside the FP window.

    Pixel set iff uc_mask = 1 and m_ave = 1 and (I > t_fp_high or I < t_fp_low).
    """
    if t_fp_low >= t_fp_high:
        raise ValueError("t_fp_low must be < t_fp_high")
    _check_dims(image, m_ave, uc_mask)
    support = (uc_mask.data == 1) & (m_ave.data == 1)
    intensity = image.data
    outside = (intensity > t_fp_high) | (intensity < t_fp_low)
    return BinaryMask2D((support & outside).astype(np.uint8))


def fnpc_compose(m_ave: BinaryMask2D, m_fn: BinaryMask2D, m_fp: BinaryMask2D) -> BinaryMask2D:
    """Corrected mask: (m_ave OR m_fn) AND NOT m_fp.

    The additive form m_ave + m_fn - m_fp stays binary only when m_fn is
    disjoint from m_ave and m_fp is contained in it; both preconditions are
    checked here rather than assumed.
    """
    _check_dims_pair(m_ave, m_fn)
    _check_dims_pair(m_ave, m_fp)
    if (m_fn.data & m_ave.data).any():
        raise ValueError("m_fn must be disjoint from m_ave")
    if (m_fp.data & ~m_ave.data.astype(bool)).any():
        raise ValueError("m_fp must be a subset of m_ave")
    return mask_diff(mask_or(m_ave, m_fn), m_fp)


def _check_dims_pair(a: BinaryMask2D, b: BinaryMask2D) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(f"mask shapes differ: {a.data.shape} vs {b.data.shape}")


@dataclass(frozen=True)
class FnpcResult:
    """Everything one 2-D run produces, intermediate stages included."""

    m_ave: BinaryMask2D
    uc_mask: BinaryMask2D
    m_fn: BinaryMask2D
    m_fp: BinaryMask2D
    m_fnpc: BinaryMask2D
    f_map: ScalarMap2D
    uc_raw: ScalarMap2D
    boxes_used: tuple[BoundingBox, ...]


def _segment_all(
    image: GrayImage2D,
    boxes: list[BoundingBox],
    backend: SegmenterBackend,
    parallelism: int,
) -> list[BinaryMask2D]:
    # Aggregation is by box index, so results do not depend on completion order.
    def one(i: int) -> BinaryMask2D:
        try:
            mask = backend.segment(image, boxes[i])
        except BackendError as e:
            raise BackendError(f"backend failed on box {i}: {e}", box_index=i) from e
        except Exception as e:
            raise BackendError(
                f"backend raised on box {i}: {e!r}", box_index=i
            ) from e
        if mask.data.shape != image.data.shape:
            raise BackendError(
                f"backend returned {mask.width}x{mask.height} mask for box {i} on a "
                f"{image.width}x{image.height} image",
                box_index=i,
            )
        return mask

    if parallelism <= 1 or len(boxes) <= 1:
        return [one(i) for i in range(len(boxes))]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, range(len(boxes))))


def run_fnpc_2d(
    image: GrayImage2D,
    initial_box: BoundingBox,
    cfg: PipelineConfig,
    backend: SegmenterBackend,
) -> FnpcResult:
    """Full 2-D pipeline: sample boxes, segment, aggregate, correct.

    The ensemble holds cfg.n_samples jittered boxes plus the initial box
    (N+1 predictions in total). Any backend failure aborts the run; a partial
    ensemble would silently change the frequency denominator.

    Deterministic for a fixed cfg.seed and a deterministic backend.
    """
    if not initial_box.within(image.width, image.height):
        raise ValueError(
            f"box {initial_box.as_tuple()} outside image {image.width}x{image.height}"
        )
    boxes = [initial_box] + sample_boxes(
        (image.width, image.height), initial_box, cfg.n_samples, cfg.radius_ratio, cfg.seed
    )
    masks = _segment_all(image, boxes, backend, cfg.backend_parallelism)
    f_map = frequency_map(masks)
    m_ave = majority_mask(f_map, cfg.t_ave)
    uc_raw = uncertainty_raw(f_map, cfg.uc_formula, cfg.epsilon)
    uc = uncertainty_mask(uc_raw, cfg.t_uc)
    m_fn = false_negative_mask(image, m_ave, uc, cfg.t_fn_low, cfg.t_fn_high)
    m_fp = false_positive_mask(image, m_ave, uc, cfg.t_fp_low, cfg.t_fp_high)
    m_fnpc = fnpc_compose(m_ave, m_fn, m_fp)
    return FnpcResult(
        m_ave=m_ave,
        uc_mask=uc,
        m_fn=m_fn,
        m_fp=m_fp,
        m_fnpc=m_fnpc,
        f_map=f_map,
        uc_raw=uc_raw,
        boxes_used=tuple(boxes),
    )
