"""Ground-plane proxemics and distancing analysis from a single camera."""

from .geometry import (
    CameraModel,
    Homography,
    HomographySpec,
    Point2,
    homography_from_spec,
    ratios_from_camera,
    trapezoid_corners,
)
from .pose import PoseDetection, parse_pose_file
from .proxemics import MetricReference, SafeDisc, ViolationRecord, analyze_frame
from .evaluation import (
    GroundTruthDistances,
    Metrics,
    aggregate,
    evaluate_frame,
    grid_search,
    load_groundtruth,
)

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "Homography",
    "HomographySpec",
    "Point2",
    "homography_from_spec",
    "ratios_from_camera",
    "trapezoid_corners",
    "PoseDetection",
    "parse_pose_file",
    "MetricReference",
    "SafeDisc",
    "ViolationRecord",
    "analyze_frame",
    "GroundTruthDistances",
    "Metrics",
    "aggregate",
    "evaluate_frame",
    "grid_search",
    "load_groundtruth",
    "__version__",
]
