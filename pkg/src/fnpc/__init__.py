"""Test-phase prompt augmentation for promptable segmenters.

Jitter a bounding-box prompt into an ensemble, vote, measure per-pixel
disagreement, repair the vote with intensity-windowed corrections, and
optionally walk the repaired mask through a volume slice by slice. Backends
are pluggable: a deterministic mock for model-free testing and an HTTP
client for a real model server.
"""

from .core import (
    BinaryMask2D,
    BoundingBox,
    GrayImage2D,
    GrayVolume3D,
    MaskVolume3D,
    PipelineConfig,
    ScalarMap2D,
    derive_seed,
    mask_and,
    mask_diff,
    mask_not,
    mask_or,
)
from .correction import (
    FnpcResult,
    false_negative_mask,
    false_positive_mask,
    fnpc_compose,
    run_fnpc_2d,
)
from .ensemble import frequency_map, majority_mask, uncertainty_mask, uncertainty_raw
from .harness import (
    CoarsenessLevel,
    EvalOutcome,
    EvalRow,
    LobeSpec,
    NotchSpec,
    PhantomSpec,
    box_from_mask,
    evaluate,
    make_phantom,
    render_csv,
)
from .metrics import MetricReport, assd, boundary, compute_report, dice, hausdorff
from .sampler import sample_boxes, sample_offsets, sampling_radius
from .segmenter import (
    BackendError,
    MockBackend,
    MockOracleConfig,
    RemoteBackend,
    SegmenterBackend,
    mock_segment,
    remote_segment,
)
from .ss2v import DegenerateBoxError, Ss2vResult, propagate_box, run_ss2v, tight_box

__version__ = "0.1.0"

__all__ = [
    "BackendError",
    "BinaryMask2D",
    "BoundingBox",
    "CoarsenessLevel",
    "DegenerateBoxError",
    "EvalOutcome",
    "EvalRow",
    "FnpcResult",
    "GrayImage2D",
    "GrayVolume3D",
    "LobeSpec",
    "MaskVolume3D",
    "MetricReport",
    "MockBackend",
    "MockOracleConfig",
    "NotchSpec",
    "PhantomSpec",
    "PipelineConfig",
    "RemoteBackend",
    "ScalarMap2D",
    "SegmenterBackend",
    "Ss2vResult",
    "assd",
    "boundary",
    "box_from_mask",
    "compute_report",
    "derive_seed",
    "dice",
    "evaluate",
    "false_negative_mask",
    "false_positive_mask",
    "fnpc_compose",
    "frequency_map",
    "hausdorff",
    "majority_mask",
    "make_phantom",
    "mask_and",
    "mask_diff",
    "mask_not",
    "mask_or",
    "mock_segment",
    "propagate_box",
    "remote_segment",
    "render_csv",
    "run_fnpc_2d",
    "run_ss2v",
    "sample_boxes",
    "sample_offsets",
    "sampling_radius",
    "tight_box",
    "uncertainty_mask",
    "uncertainty_raw",
    "__version__",
]
