"""Inference bridge: serialized detector in, sevseg detection JSON out."""

from .letterbox import Transform, letterbox_image, model_box_to_original, transform_for
from .runner import BridgeConfig, BridgeError, export_detections

__version__ = "0.1.0"

__all__ = ["BridgeConfig", "BridgeError", "Transform", "export_detections",
           "letterbox_image", "model_box_to_original", "transform_for", "__version__"]
