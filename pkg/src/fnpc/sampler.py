"""Monte Carlo bounding-box augmentation around an initial prompt.

Given an initial box, draws N new boxes of identical size whose centers are
uniformly distributed over the closed disk of radius R around the initial
center, where R = min(box width, box height) / radius_ratio.

Randomness comes from numpy's PCG64 stream seeded with a caller-supplied
64-bit seed, so sampled boxes are stable across platforms and sessions. The
draw order is fixed: one (n, 2) uniform block, column 0 feeding the radial
coordinate and column 1 the angle.
"""

from __future__ import annotations

import numpy as np

from .core import BoundingBox


def sampling_radius(box: BoundingBox, radius_ratio: float) -> float:
    """Radius of the center-jitter disk: min(box edges) / radius_ratio.

    Parameters
    ----------
    box : BoundingBox
        The initial prompt box.
    radius_ratio : float
        Positive divisor; larger values confine the jitter.

    Returns
    -------
    float
        Disk radius in pixels, > 0.
    """
    if radius_ratio <= 0:
        raise ValueError("radius_ratio must be > 0")
    return min(box.width, box.height) / radius_ratio


def sample_offsets(n: int, radius: float, seed: int) -> np.ndarray:
    """Draw n center offsets uniform over the closed disk of given radius.

    Polar inversion: r = radius * sqrt(u1), theta = 2*pi*u2 with u1, u2
    uniform on [0, 1). Returns an (n, 2) float64 array of (dx, dy) pairs,
    every row with Euclidean norm <= radius.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if radius < 0:
        raise ValueError("radius must be >= 0")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((n, 2))
    r = radius * np.sqrt(u[:, 0])
    theta = 2.0 * np.pi * u[:, 1]
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def sample_boxes(
    image_dims: tuple[int, int],
    initial_box: BoundingBox,
    n: int,
    radius_ratio: float,
    seed: int,
) -> list[BoundingBox]:
    """Sample n same-size boxes with jittered centers, clamped into the image.

    Each real-valued offset from `sample_offsets` is rounded to the nearest
    integer translation (numpy round-half-even), applied to the initial box,
    and the result is translated minimally so it lies fully inside the image.
    Rounding the translation, rather than each corner separately, is what
    keeps every sampled box exactly the size of the initial one.

    Parameters
    ----------
    image_dims : (width, height)
        Bounds the boxes must respect.
    initial_box : BoundingBox
        Prompt to jitter; must lie within image_dims.
    n : int
        Number of boxes to draw (>= 0).
    radius_ratio : float
        Divisor for `sampling_radius`.
    seed : int
        PRNG seed; identical seeds give identical box lists.

    Returns
    -------
    list of BoundingBox
        Exactly n boxes, each initial_box.width x initial_box.height, each
        fully inside the image.
    """
    width, height = image_dims
    if not initial_box.within(width, height):
        raise ValueError(
            f"initial box {initial_box.as_tuple()} exceeds image bounds {width}x{height}"
        )
    radius = sampling_radius(initial_box, radius_ratio)
    offsets = sample_offsets(n, radius, seed)
    shifts = np.rint(offsets).astype(np.int64)
    boxes = []
    for dx, dy in shifts:
        boxes.append(initial_box.translated(int(dx), int(dy)).clamped(width, height))
    return boxes
