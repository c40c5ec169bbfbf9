"""Model-side plumbing: predictor loading, prompt conversion, mask selection.

The predictor is duck-typed (set_image / predict), so tests can substitute a
fake without the segment-anything package or a checkpoint. The real import
happens lazily inside load_sam_predictor.
"""

from __future__ import annotations

import os
import threading

import numpy as np


def gray_to_rgb(gray: np.ndarray) -> np.ndarray:
    """Replicate a (H, W) uint8 image to the (H, W, 3) input SAM expects."""
    if gray.ndim != 2 or gray.dtype != np.uint8:
        raise ValueError(f"expected 2-D uint8 image, got {gray.dtype} {gray.shape}")
    return np.repeat(gray[:, :, None], 3, axis=2)


def wire_box_to_inclusive(box: tuple[int, int, int, int]) -> np.ndarray:
    """Convert a half-open wire box to SAM's XYXY prompt array.

    SAM box prompts name the last pixel rather than one-past-it, so the max
    coordinates drop by 1. A 1-pixel-wide wire box [x, y, x+1, y+1] becomes
    the degenerate-looking but valid prompt [x, y, x, y].
    """
    xmin, ymin, xmax, ymax = box
    return np.array([xmin, ymin, xmax - 1, ymax - 1], dtype=np.float32)


def best_mask(masks: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Pick the highest-scored candidate; ties go to the lowest index."""
    if masks.shape[0] != scores.shape[0] or masks.shape[0] == 0:
        raise ValueError(
            f"mask/score mismatch: {masks.shape[0]} masks, {scores.shape[0]} scores"
        )
    return masks[int(np.argmax(scores))]


class SegmentationModel:
    """One loaded predictor plus the lock that serializes inference.

    SamPredictor is stateful (set_image then predict), so concurrent requests
    must not interleave; the service stays stateless per request by setting
    the image inside the locked region every time.
    """

    def __init__(self, predictor, name: str):
        self._predictor = predictor
        self._lock = threading.Lock()
        self.name = name

    def segment(self, gray: np.ndarray, box: tuple[int, int, int, int]) -> np.ndarray:
        """(H, W) uint8 image + half-open box -> (H, W) uint8 mask in {0, 255}."""
        rgb = gray_to_rgb(gray)
        prompt = wire_box_to_inclusive(box)
        with self._lock:
            self._predictor.set_image(rgb)
            masks, scores, _ = self._predictor.predict(
                box=prompt, multimask_output=True
            )
        chosen = best_mask(np.asarray(masks), np.asarray(scores))
        if chosen.shape != gray.shape:
            raise RuntimeError(
                f"predictor returned {chosen.shape}, image is {gray.shape}"
            )
        return np.where(chosen.astype(bool), 255, 0).astype(np.uint8)


def load_sam_predictor(checkpoint: str, variant: str, device: str):
    """Instantiate the real SamPredictor; imports torch-heavy deps lazily."""
    if not os.path.isfile(checkpoint):
        raise FileNotFoundError(f"checkpoint not found: {checkpoint}")
    from segment_anything import SamPredictor, sam_model_registry

    sam = sam_model_registry[variant](checkpoint=checkpoint)
    sam.to(device)
    return SamPredictor(sam)
