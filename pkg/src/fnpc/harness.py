"""Experiment support: coarse prompt synthesis, phantoms, batch evaluation.

Prompt boxes are synthesized from ground truth the way annotators are
simulated: take the tight box and push each edge outward by a level-dependent
random amount (fine 0-2 px, medium 2-4, coarse 4-6, inclusive). Phantoms are
noisy ellipses / ellipsoids with two optional planted pathologies for the
mock backend: a dim lobe outside the object that thresholding wrongly
captures (a controlled false positive) and a dark notch inside the object
that thresholding misses (a controlled false negative).
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BinaryMask2D,
    BoundingBox,
    GrayImage2D,
    GrayVolume3D,
    MaskVolume3D,
    PipelineConfig,
    derive_seed,
)
from .correction import run_fnpc_2d
from .metrics import MetricReport, compute_report
from .segmenter import BackendError, SegmenterBackend
from .ss2v import run_ss2v, tight_box

CSV_HEADER = "sample_id,method,level,dice,assd,hd,hd95,defined"


class CoarsenessLevel(enum.Enum):
    """Prompt sloppiness: per-edge outward expansion range, inclusive."""

    FINE = ("fine", 0, 2)
    MEDIUM = ("medium", 2, 4)
    COARSE = ("coarse", 4, 6)

    def __init__(self, label: str, expand_low: int, expand_high: int):
        self.label = label
        self.expand_low = expand_low
        self.expand_high = expand_high

    @classmethod
    def from_name(cls, name: str) -> "CoarsenessLevel":
        for level in cls:
            if level.label == name.lower():
                return level
        raise ValueError(f"unknown coarseness level {name!r}")


def box_from_mask(gt: BinaryMask2D, level: CoarsenessLevel, seed: int) -> BoundingBox:
    """Tight box of the ground truth, each edge pushed outward independently.

    Four expansions are drawn in (xmin, ymin, xmax, ymax) order, uniform
    integers over the level's inclusive range, then the box is clipped to the
    image bounds (a ground truth touching the border still yields a valid
    box). Seed-deterministic.
    """
    tight = tight_box(gt)
    rng = np.random.Generator(np.random.PCG64(seed))
    e = rng.integers(level.expand_low, level.expand_high, size=4, endpoint=True)
    return BoundingBox(
        max(0, tight.xmin - int(e[0])),
        max(0, tight.ymin - int(e[1])),
        min(gt.width, tight.xmax + int(e[2])),
        min(gt.height, tight.ymax + int(e[3])),
    )


@dataclass(frozen=True)
class LobeSpec:
    """Dim appendage glued to the object's +x side, excluded from ground truth.

    Rectangle of length x thickness pixels starting one column right of the
    object's rightmost extent, vertically centered. Give it an intensity at
    or above the mock threshold but outside the FP window and the pipeline
    has a planted false positive to remove.
    """

    length: int
    thickness: int
    intensity: int


@dataclass(frozen=True)
class NotchSpec:
    """Dark disk at the object's center, included in ground truth.

    With an intensity below the mock threshold the backend never predicts it;
    keep it outside the FN window and it stays an honest miss every method
    pays for equally.
    """

    radius: int
    intensity: int


@dataclass(frozen=True)
class PhantomSpec:
    """Recipe for a synthetic test object; 2-D (w, h) or 3-D (w, h, depth) dims."""

    dims: tuple[int, ...]
    center: tuple[float, ...]
    radii: tuple[float, ...]
    fg_intensity: int = 120
    bg_intensity: int = 30
    noise_amplitude: int = 0
    fp_lobe: LobeSpec | None = None
    fn_notch: NotchSpec | None = None
    seed: int = 0

    def __post_init__(self):
        nd = len(self.dims)
        if nd not in (2, 3):
            raise ValueError("dims must be 2-D or 3-D")
        if len(self.center) != nd or len(self.radii) != nd:
            raise ValueError("center and radii must match dims in rank")
        for c, r, d in zip(self.center, self.radii, self.dims):
            if r <= 0:
                raise ValueError("radii must be positive")
            if c - r < 0 or c + r > d - 1:
                raise ValueError("shape exceeds phantom bounds")
        for name in ("fg_intensity", "bg_intensity"):
            if not 0 <= getattr(self, name) <= 255:
                raise ValueError(f"{name} must lie in [0, 255]")
        if not 0 <= self.noise_amplitude <= 255:
            raise ValueError("noise_amplitude must lie in [0, 255]")
        if nd == 3 and (self.fp_lobe is not None or self.fn_notch is not None):
            raise ValueError("fp_lobe / fn_notch are planar and need 2-D dims")
        if self.fp_lobe is not None:
            lobe = self.fp_lobe
            if lobe.length <= 0 or lobe.thickness <= 0:
                raise ValueError("lobe length and thickness must be positive")
            if not 0 <= lobe.intensity <= 255:
                raise ValueError("lobe intensity must lie in [0, 255]")
            if self.center[0] + self.radii[0] + 1 + lobe.length > self.dims[0]:
                raise ValueError("fp_lobe exceeds phantom bounds")
        if self.fn_notch is not None:
            notch = self.fn_notch
            if notch.radius <= 0:
                raise ValueError("notch radius must be positive")
            if not 0 <= notch.intensity <= 255:
                raise ValueError("notch intensity must lie in [0, 255]")
            if notch.radius >= min(self.radii):
                raise ValueError("fn_notch must sit strictly inside the object")


def _ellipse_mask_2d(dims, center, radii) -> np.ndarray:
    w, h = dims
    ys, xs = np.ogrid[0:h, 0:w]
    return ((xs - center[0]) / radii[0]) ** 2 + ((ys - center[1]) / radii[1]) ** 2 <= 1.0


def _make_phantom_2d(spec: PhantomSpec) -> tuple[GrayImage2D, BinaryMask2D]:
    w, h = spec.dims
    ellipse = _ellipse_mask_2d(spec.dims, spec.center, spec.radii)
    img = np.full((h, w), spec.bg_intensity, dtype=np.float64)
    img[ellipse] = spec.fg_intensity
    gt = ellipse.copy()
    if spec.fp_lobe is not None:
        lobe = spec.fp_lobe
        x0 = int(round(spec.center[0] + spec.radii[0])) + 1
        y0 = int(round(spec.center[1])) - lobe.thickness // 2
        region = np.zeros((h, w), dtype=bool)
        region[max(0, y0) : y0 + lobe.thickness, x0 : x0 + lobe.length] = True
        region &= ~ellipse
        img[region] = lobe.intensity
    if spec.fn_notch is not None:
        notch = spec.fn_notch
        ys, xs = np.ogrid[0:h, 0:w]
        disk = (xs - spec.center[0]) ** 2 + (ys - spec.center[1]) ** 2 <= notch.radius**2
        img[disk] = notch.intensity
    if spec.noise_amplitude > 0:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        img += rng.integers(
            -spec.noise_amplitude, spec.noise_amplitude, size=(h, w), endpoint=True
        )
    image = GrayImage2D(np.clip(img, 0, 255).astype(np.uint8))
    return image, BinaryMask2D(gt.astype(np.uint8))


def _make_phantom_3d(spec: PhantomSpec) -> tuple[GrayVolume3D, MaskVolume3D]:
    w, h, depth = spec.dims
    cx, cy, cz = spec.center
    rx, ry, rz = spec.radii
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    images, gts = [], []
    for z in range(depth):
        # Cross-section of the ellipsoid at height z: a scaled ellipse.
        t = 1.0 - ((z - cz) / rz) ** 2
        img = np.full((h, w), spec.bg_intensity, dtype=np.float64)
        gt = np.zeros((h, w), dtype=bool)
        if t > 0:
            scale = math.sqrt(t)
            gt = _ellipse_mask_2d((w, h), (cx, cy), (rx * scale, ry * scale))
            img[gt] = spec.fg_intensity
        if spec.noise_amplitude > 0:
            img += rng.integers(
                -spec.noise_amplitude, spec.noise_amplitude, size=(h, w), endpoint=True
            )
        images.append(GrayImage2D(np.clip(img, 0, 255).astype(np.uint8)))
        gts.append(BinaryMask2D(gt.astype(np.uint8)))
    return GrayVolume3D(tuple(images)), MaskVolume3D(tuple(gts))


def make_phantom(spec: PhantomSpec):
    """Render a phantom: (image, ground truth), 2-D or 3-D per spec.dims.

    Bit-reproducible from the spec alone; noise is drawn from PCG64(spec.seed)
    as uniform integers in [-noise_amplitude, +noise_amplitude], added before
    clipping to [0, 255].
    """
    if len(spec.dims) == 2:
        return _make_phantom_2d(spec)
    return _make_phantom_3d(spec)


@dataclass(frozen=True)
class EvalRow:
    sample_id: str
    method: str
    level: str
    report: MetricReport


@dataclass(frozen=True)
class EvalOutcome:
    """Per-sample metric rows plus any samples lost to backend failures."""

    rows: tuple[EvalRow, ...]
    failures: tuple[tuple[str, str], ...]


def _format_row(sample_id: str, method: str, level: str, r: MetricReport) -> str:
    return (
        f"{sample_id},{method},{level},{r.dice:.6f},{r.assd:.6f},{r.hd:.6f},"
        f"{r.hd95:.6f},{'true' if r.defined else 'false'}"
    )


def evaluate(
    dataset,
    cfg: PipelineConfig,
    backend: SegmenterBackend,
    sample_ids: list[str] | None = None,
) -> EvalOutcome:
    """Score every sample under raw single-box, majority, and corrected masks.

    dataset: sequence of (image, gt, level) with 2-D entries, or
    (volume, gt_volume, level) for 3-D entries. Each sample's prompt box is
    synthesized from its ground truth at the given coarseness with a sub-seed
    mixed from (cfg.seed, sample index), so the whole table is a pure
    function of (dataset, cfg, backend).

    2-D samples yield rows for methods single / average / fnpc. 3-D samples
    are prompted on their central slice and yield those three rows scored on
    that slice, plus an ss2v row scored on the full volume.

    A backend failure flags the sample and drops its rows; evaluation
    continues with the remaining samples. sample_ids, when given, must match
    the dataset in length and replaces the default positional s000, s001, ...

    Sub-seeds depend on the sample's position, not its content, so inserting
    a sample reshuffles later samples' draws; identical datasets and cfg give
    identical outcomes.
    """
    if len(dataset) == 0:
        raise ValueError("dataset must be nonempty")
    if sample_ids is not None and len(sample_ids) != len(dataset):
        raise ValueError("sample_ids length must match dataset length")
    rows: list[EvalRow] = []
    failures: list[tuple[str, str]] = []
    for i, (image, gt, level) in enumerate(dataset):
        sample_id = sample_ids[i] if sample_ids is not None else f"s{i:03d}"
        level_name = level.label if isinstance(level, CoarsenessLevel) else str(level)
        level_obj = level if isinstance(level, CoarsenessLevel) else CoarsenessLevel.from_name(level)
        sample_cfg = dataclasses.replace(cfg, seed=derive_seed(cfg.seed, 1, i))
        box_seed = derive_seed(cfg.seed, 2, i)
        try:
            if isinstance(image, GrayVolume3D):
                start = image.slice_count // 2
                gt_slice = gt[start]
                box = box_from_mask(gt_slice, level_obj, box_seed)
                single = backend.segment(image[start], box)
                result = run_fnpc_2d(image[start], box, sample_cfg, backend)
                volume_result = run_ss2v(image, start, box, sample_cfg, backend)
                rows.append(EvalRow(sample_id, "single", level_name, compute_report(single, gt_slice)))
                rows.append(EvalRow(sample_id, "average", level_name, compute_report(result.m_ave, gt_slice)))
                rows.append(EvalRow(sample_id, "fnpc", level_name, compute_report(result.m_fnpc, gt_slice)))
                rows.append(
                    EvalRow(
                        sample_id,
                        "ss2v",
                        level_name,
                        compute_report(volume_result.mask_volume, gt),
                    )
                )
            else:
                box = box_from_mask(gt, level_obj, box_seed)
                single = backend.segment(image, box)
                result = run_fnpc_2d(image, box, sample_cfg, backend)
                rows.append(EvalRow(sample_id, "single", level_name, compute_report(single, gt)))
                rows.append(EvalRow(sample_id, "average", level_name, compute_report(result.m_ave, gt)))
                rows.append(EvalRow(sample_id, "fnpc", level_name, compute_report(result.m_fnpc, gt)))
        except BackendError as e:
            failures.append((sample_id, str(e)))
    return EvalOutcome(rows=tuple(rows), failures=tuple(failures))


def _aggregate_rows(rows) -> list[str]:
    # Mean and population std per (method, level), over defined samples only.
    groups: dict[tuple[str, str], list[MetricReport]] = {}
    order: list[tuple[str, str]] = []
    for row in rows:
        key = (row.method, row.level)
        if key not in groups:
            groups[key] = []
            order.append(key)
        if row.report.defined:
            groups[key].append(row.report)
    lines = []
    for method, level in order:
        reports = groups[(method, level)]
        for stat_name, stat in (("mean", np.mean), ("std", np.std)):
            if reports:
                vals = {
                    m: float(stat([getattr(r, m) for r in reports]))
                    for m in ("dice", "assd", "hd", "hd95")
                }
                agg = MetricReport(defined=True, **vals)
            else:
                agg = MetricReport(math.nan, math.nan, math.nan, math.nan, False)
            lines.append(_format_row(stat_name, method, level, agg))
    return lines


def render_csv(outcome: EvalOutcome) -> str:
    """Fixed-format CSV: header, per-sample rows, then mean/std rows.

    Floats use 6 decimals (nan prints as "nan"); aggregate rows carry
    sample_id "mean" / "std" and cover defined samples only. Identical
    outcomes render to identical bytes.
    """
    lines = [CSV_HEADER]
    for row in outcome.rows:
        lines.append(_format_row(row.sample_id, row.method, row.level, row.report))
    lines.extend(_aggregate_rows(outcome.rows))
    return "\n".join(lines) + "\n"
