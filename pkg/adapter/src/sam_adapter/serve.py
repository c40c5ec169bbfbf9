"""Entry point: load the checkpoint named by the environment and serve."""

from __future__ import annotations

import sys

import uvicorn

from .app import create_app
from .config import AdapterConfig
from .model import SegmentationModel, load_sam_predictor


def main() -> None:
    try:
        cfg = AdapterConfig.from_env()
        predictor = load_sam_predictor(cfg.checkpoint, cfg.variant, cfg.device)
    except (ValueError, FileNotFoundError, ImportError) as e:
        print(f"error: {e}", file=sys.stderr)
        sys.exit(1)
    model = SegmentationModel(predictor, cfg.model_name)
    uvicorn.run(create_app(model), host=cfg.host, port=cfg.port)


if __name__ == "__main__":
    main()
