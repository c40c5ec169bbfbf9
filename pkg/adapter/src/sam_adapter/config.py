"""Service configuration, sourced from environment variables."""

from __future__ import annotations

import os
from dataclasses import dataclass

VARIANTS = ("vit_b", "vit_l", "vit_h")


@dataclass(frozen=True)
class AdapterConfig:
    """Settings for one service instance.

    `checkpoint` must point at weights matching `variant`; the model registry
    rejects a mismatch at load time (state-dict shape errors), there is no
    cheaper upfront check.
    """

    checkpoint: str
    variant: str = "vit_l"
    device: str = "cpu"
    host: str = "0.0.0.0"
    port: int = 8008

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not 0 < self.port < 65536:
            raise ValueError(f"port out of range: {self.port}")

    @property
    def model_name(self) -> str:
        return f"sam-{self.variant}"

    @classmethod
    def from_env(cls, environ=os.environ) -> "AdapterConfig":
        """SAM_CHECKPOINT is required; SAM_VARIANT, SAM_DEVICE, SAM_HOST and
        SAM_PORT override the defaults."""
        checkpoint = environ.get("SAM_CHECKPOINT", "")
        if not checkpoint:
            raise ValueError("SAM_CHECKPOINT is not set")
        return cls(
            checkpoint=checkpoint,
            variant=environ.get("SAM_VARIANT", "vit_l"),
            device=environ.get("SAM_DEVICE", "cpu"),
            host=environ.get("SAM_HOST", "0.0.0.0"),
            port=int(environ.get("SAM_PORT", "8008")),
        )
