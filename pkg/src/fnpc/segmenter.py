"""Pluggable promptable-segmentation backends.

Three pieces: the backend interface, a deterministic intensity-threshold mock
used for testing without model weights, and an HTTP client speaking the wire
protocol (see `remote_segment`) to a model server.

Backends return full-image masks, never box-cropped ones: foreground may spill
outside the prompt box, and downstream mask algebra operates on whole rasters.
"""

from __future__ import annotations

import abc
import base64
import json
from dataclasses import dataclass

import numpy as np
import requests
from scipy import ndimage

from .core import BinaryMask2D, BoundingBox, GrayImage2D
from .fileio import gray_to_png_bytes, png_bytes_to_gray

DEFAULT_TIMEOUT = 30.0

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)


class BackendError(RuntimeError):
    """A backend call failed: transport error, bad status, or bad payload."""

    def __init__(self, message: str, box_index: int | None = None):
        super().__init__(message)
        self.box_index = box_index


class SegmenterBackend(abc.ABC):
    """Interface every segmenter implements.

    Attributes
    ----------
    name : str
        Human-readable capability descriptor.
    deterministic : bool
        Whether identical (image, box) inputs always yield identical masks.
    """

    name: str = "abstract"
    deterministic: bool = False

    @abc.abstractmethod
    def segment(self, image: GrayImage2D, box: BoundingBox) -> BinaryMask2D:
        """Segment the object indicated by `box`; mask dims equal image dims."""


def _check_box(image: GrayImage2D, box: BoundingBox) -> None:
    if not box.within(image.width, image.height):
        raise ValueError(
            f"box {box.as_tuple()} outside image {image.width}x{image.height}"
        )


@dataclass(frozen=True)
class MockOracleConfig:
    """Knobs of the deterministic mock segmenter.

    intensity_threshold: pixels inside the box at or above this value are
    foreground. keep_largest_component: reduce to the largest 4-connected
    blob (ties broken by lowest label in raster-scan order). dilation_radius:
    Euclidean dilation applied last; it may push foreground outside the box,
    which is how tests inject controlled false positives.
    """

    intensity_threshold: int = 128
    keep_largest_component: bool = False
    dilation_radius: int = 0

    def __post_init__(self):
        if not 0 <= self.intensity_threshold <= 255:
            raise ValueError("intensity_threshold must lie in [0, 255]")
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be >= 0")


def mock_segment(image: GrayImage2D, box: BoundingBox, cfg: MockOracleConfig) -> BinaryMask2D:
    """Threshold the box interior, optionally keep the largest blob, dilate.

    Pure function of its arguments; the workhorse test backend.
    """
    _check_box(image, box)
    fg = np.zeros((image.height, image.width), dtype=bool)
    window = image.data[box.ymin : box.ymax, box.xmin : box.xmax]
    fg[box.ymin : box.ymax, box.xmin : box.xmax] = window >= cfg.intensity_threshold
    if cfg.keep_largest_component and fg.any():
        labels, count = ndimage.label(fg, structure=FOUR_CONNECTED)
        if count > 1:
            sizes = ndimage.sum_labels(fg, labels, index=np.arange(1, count + 1))
            fg = labels == (int(np.argmax(sizes)) + 1)
    if cfg.dilation_radius > 0 and fg.any():
        dist = ndimage.distance_transform_edt(~fg)
        fg = dist <= cfg.dilation_radius
    return BinaryMask2D(fg.astype(np.uint8))


class MockBackend(SegmenterBackend):
    """Deterministic intensity-threshold backend wrapping `mock_segment`."""

    deterministic = True

    def __init__(self, cfg: MockOracleConfig | None = None):
        self.cfg = cfg if cfg is not None else MockOracleConfig()
        self.name = (
            f"mock-oracle(threshold={self.cfg.intensity_threshold},"
            f"largest={self.cfg.keep_largest_component},"
            f"dilate={self.cfg.dilation_radius})"
        )

    def segment(self, image: GrayImage2D, box: BoundingBox) -> BinaryMask2D:
        return mock_segment(image, box, self.cfg)


def remote_segment(
    endpoint: str,
    image: GrayImage2D,
    box: BoundingBox,
    timeout: float = DEFAULT_TIMEOUT,
    session: requests.Session | None = None,
) -> BinaryMask2D:
    """Call a model server over the wire protocol and decode its mask.

    Protocol: POST {endpoint}/segment with JSON body
    {"image_png_b64": <base64 grayscale PNG>, "box": [xmin, ymin, xmax, ymax]}
    using half-open pixel coordinates. Success is 200 with
    {"mask_png_b64": <base64 grayscale PNG, 0 or 255, same dims>}; any nonzero
    pixel is treated as foreground. The server answers 400 for malformed
    bodies, 422 for out-of-bounds boxes, 500 for model failures, and exposes
    GET {endpoint}/health.

    Raises BackendError on connection failure, timeout, non-200 status,
    undecodable payload, or a mask whose dimensions differ from the image.
    """
    _check_box(image, box)
    body = {
        "image_png_b64": base64.b64encode(gray_to_png_bytes(image.data)).decode("ascii"),
        "box": list(box.as_tuple()),
    }
    url = endpoint.rstrip("/") + "/segment"
    post = session.post if session is not None else requests.post
    try:
        resp = post(url, json=body, timeout=timeout)
    except requests.exceptions.RequestException as e:
        raise BackendError(f"request to {url} failed: {e}") from e
    if resp.status_code != 200:
        snippet = resp.text[:200]
        raise BackendError(f"{url} returned status {resp.status_code}: {snippet}")
    try:
        payload = resp.json()
        mask_b64 = payload["mask_png_b64"]
        arr = png_bytes_to_gray(base64.b64decode(mask_b64))
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
        raise BackendError(f"{url} returned an undecodable mask payload: {e}") from e
    if arr.shape != image.data.shape:
        raise BackendError(
            f"{url} returned a {arr.shape[1]}x{arr.shape[0]} mask for a "
            f"{image.width}x{image.height} image"
        )
    return BinaryMask2D((arr != 0).astype(np.uint8))


class RemoteBackend(SegmenterBackend):
    """HTTP client backend; one Session shared across calls, thread-safe."""

    deterministic = False

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout
        self.name = f"remote({endpoint})"
        self._session = requests.Session()

    def segment(self, image: GrayImage2D, box: BoundingBox) -> BinaryMask2D:
        return remote_segment(
            self.endpoint, image, box, timeout=self.timeout, session=self._session
        )

    def health(self) -> dict:
        """GET {endpoint}/health; returns the decoded JSON body."""
        url = self.endpoint.rstrip("/") + "/health"
        try:
            resp = self._session.get(url, timeout=self.timeout)
        except requests.exceptions.RequestException as e:
            raise BackendError(f"health check against {url} failed: {e}") from e
        if resp.status_code != 200:
            raise BackendError(f"{url} returned status {resp.status_code}")
        return resp.json()
