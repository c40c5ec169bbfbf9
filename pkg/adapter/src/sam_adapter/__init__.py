"""HTTP adapter exposing a SAM checkpoint behind the box-prompt wire protocol."""

from .app import create_app
from .config import AdapterConfig
from .model import SegmentationModel, load_sam_predictor

__all__ = ["AdapterConfig", "SegmentationModel", "create_app", "load_sam_predictor"]
__version__ = "0.1.0"
