"""Court-aware copy-paste augmentation for sports instance segmentation."""
from .court import CourtParams, CourtRegion, detect_court
from .errors import CourtPriorError
from .raster import Raster, Rect, read_image, write_image

__all__ = ["CourtParams", "CourtRegion", "CourtPriorError", "Raster", "Rect", "detect_court", "read_image", "write_image"]
__version__ = "0.1.0"
