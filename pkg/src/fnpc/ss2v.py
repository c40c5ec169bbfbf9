"""Single-slice-to-volume propagation.

One annotated slice seeds the whole volume: the starting slice is segmented
with the 2-D pipeline, then each neighboring slice receives a synthetic box
derived from the previous slice's corrected mask, with per-corner movement
clamped so the prompt cannot jump more than t_b pixels per coordinate per
slice. The two directions run independently from the same starting result.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .core import (
    BinaryMask2D,
    BoundingBox,
    GrayVolume3D,
    MaskVolume3D,
    PipelineConfig,
    derive_seed,
)
from .correction import FnpcResult, run_fnpc_2d
from .segmenter import BackendError, SegmenterBackend

TERMINATION_REASONS = ("exhausted", "empty_mask", "degenerate_box")

# A candidate box narrower than this is treated as propagation collapse.
MIN_CANDIDATE_AREA = 4


class DegenerateBoxError(ValueError):
    """Per-corner mixing produced a box with no interior."""


def tight_box(mask: BinaryMask2D) -> BoundingBox:
    """Smallest half-open box containing every foreground pixel."""
    if mask.is_empty:
        raise ValueError("tight_box of an empty mask is undefined")
    rows = np.flatnonzero(mask.data.any(axis=1))
    cols = np.flatnonzero(mask.data.any(axis=0))
    return BoundingBox(
        int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1
    )


def propagate_box(prev_box: BoundingBox, candidate_box: BoundingBox, t_b: int) -> BoundingBox:
    """Mix candidate coordinates into the previous box, one corner at a time.

    Each of the four coordinates independently takes the candidate's value
    when its absolute change from prev_box is <= t_b, and otherwise keeps the
    previous value. Raises DegenerateBoxError when the mixed coordinates no
    longer form a valid box (possible when some coordinates move and their
    partners are rejected).
    """
    if t_b < 0:
        raise ValueError("t_b must be >= 0")
    mixed = []
    for prev, cand in zip(prev_box.as_tuple(), candidate_box.as_tuple()):
        mixed.append(cand if abs(cand - prev) <= t_b else prev)
    xmin, ymin, xmax, ymax = mixed
    if xmin >= xmax or ymin >= ymax:
        raise DegenerateBoxError(
            f"mixing {prev_box.as_tuple()} with {candidate_box.as_tuple()} at "
            f"t_b={t_b} gives degenerate ({xmin},{ymin})->({xmax},{ymax})"
        )
    return BoundingBox(xmin, ymin, xmax, ymax)


@dataclass(frozen=True)
class Ss2vResult:
    """Volume segmentation plus the per-slice provenance needed to audit it.

    boxes_per_slice and per_slice_results hold entries exactly for the
    starting slice and for every slice whose corrected mask is nonempty;
    slices never reached, or reached but empty, contribute empty masks to
    mask_volume and no box. termination_reasons maps "up" (increasing index)
    and "down" to one of exhausted / empty_mask / degenerate_box.
    """

    mask_volume: MaskVolume3D
    boxes_per_slice: dict[int, BoundingBox]
    per_slice_results: dict[int, FnpcResult]
    termination_reasons: dict[str, str]
    start_slice: int


def run_ss2v(
    volume: GrayVolume3D,
    start_slice: int,
    initial_box: BoundingBox,
    cfg: PipelineConfig,
    backend: SegmenterBackend,
) -> Ss2vResult:
    """Propagate one box annotation through a volume, slice by slice.

    The starting slice runs with cfg.seed unchanged, so a single-slice volume
    reproduces run_fnpc_2d bit for bit. Every other slice runs with a sub-seed
    mixed from (cfg.seed, slice index), making both directions reproducible
    and independent of each other.

    A direction stops when the slice range is exhausted, a slice's corrected
    mask comes back empty, the mask's tight box has area < MIN_CANDIDATE_AREA,
    or per-corner mixing degenerates. Backend failures abort the whole run
    with the slice index attached.
    """
    if not 0 <= start_slice < volume.slice_count:
        raise ValueError(
            f"start_slice {start_slice} out of range for {volume.slice_count} slices"
        )
    if not initial_box.within(volume.width, volume.height):
        raise ValueError(
            f"box {initial_box.as_tuple()} outside slice dims "
            f"{volume.width}x{volume.height}"
        )

    empty = BinaryMask2D.zeros(volume.width, volume.height)
    masks: list[BinaryMask2D] = [empty] * volume.slice_count
    boxes: dict[int, BoundingBox] = {}
    results: dict[int, FnpcResult] = {}

    try:
        start_result = run_fnpc_2d(volume[start_slice], initial_box, cfg, backend)
    except BackendError as e:
        raise BackendError(f"slice {start_slice}: {e}", box_index=e.box_index) from e
    masks[start_slice] = start_result.m_fnpc
    boxes[start_slice] = initial_box
    results[start_slice] = start_result

    reasons: dict[str, str] = {}
    for direction, step in (("up", 1), ("down", -1)):
        prev_box = initial_box
        prev_mask = start_result.m_fnpc
        index = start_slice + step
        while True:
            if prev_mask.is_empty:
                reasons[direction] = "empty_mask"
                break
            if not 0 <= index < volume.slice_count:
                reasons[direction] = "exhausted"
                break
            candidate = tight_box(prev_mask)
            if candidate.area < MIN_CANDIDATE_AREA:
                reasons[direction] = "degenerate_box"
                break
            try:
                next_box = propagate_box(prev_box, candidate, cfg.t_b)
            except DegenerateBoxError:
                reasons[direction] = "degenerate_box"
                break
            slice_cfg = dataclasses.replace(cfg, seed=derive_seed(cfg.seed, index))
            try:
                result = run_fnpc_2d(volume[index], next_box, slice_cfg, backend)
            except BackendError as e:
                raise BackendError(f"slice {index}: {e}", box_index=e.box_index) from e
            if result.m_fnpc.is_empty:
                reasons[direction] = "empty_mask"
                break
            masks[index] = result.m_fnpc
            boxes[index] = next_box
            results[index] = result
            prev_box = next_box
            prev_mask = result.m_fnpc
            index += step

    return Ss2vResult(
        mask_volume=MaskVolume3D(tuple(masks)),
        boxes_per_slice=boxes,
        per_slice_results=results,
        termination_reasons=reasons,
        start_slice=start_slice,
    )
