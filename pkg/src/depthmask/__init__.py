"""Instance segmentation by depth: discretize depth into classes, then cut
instance masks out of a pixel-level depth-class map using each detected
object's depth class, depth threshold and 2D box."""

from .assembly import (
    CATEGORIES,
    QUANTIZATION_MARGIN,
    Category,
    InstanceDetection,
    InstanceMask,
    PixelDepthMap,
    assemble,
    match_pixels,
    scale_bbox,
)
from .depth_bins import BACKGROUND, DepthBins, Scheme
from .errors import (
    ConfigurationError,
    DegenerateGeometryError,
    DepthMaskError,
    DomainError,
    InputError,
    NonDifferentiableError,
    ParseError,
)
from .evaluation import EvalResult, average_precision, evaluate, mask_iou
from .geometry import (
    CameraIntrinsics,
    ObjectDims,
    Point3D,
    corners_from_dims,
    depth_margin,
    depth_threshold,
    dims_from_corners,
    locate_3d,
    project,
)

__version__ = "0.1.0"
