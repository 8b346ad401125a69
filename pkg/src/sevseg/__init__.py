"""Seven-segment display reading pipeline and detector-evaluation toolkit."""

from .geometry import BoundingBox, Detection, aspect_ratio, clip, iou

__version__ = "0.1.0"

__all__ = ["BoundingBox", "Detection", "aspect_ratio", "clip", "iou", "__version__"]
