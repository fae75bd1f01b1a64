"""Adaptive full-body anonymization for video frames."""
from ._backend import BACKEND
from .adaptive import (
    EmptyMaskError,
    adaptive_blur,
    adaptive_pixelize,
    adaptive_scaler,
    anonymize_instances,
    odd_floor,
    sigma_from_kernel,
)
from .filters import (
    CannyParams,
    GaussianKernel,
    ParameterError,
    blacken,
    blacken_edged,
    build_gaussian_kernel,
    canny_edges,
    gaussian_blur,
    pixelize,
)
from .image import BBox, ContractError, InstanceMask, compose_masked, crop, mask_area, paste, tight_bbox
from .methods import AdaptiveParams, AnonymizerSpec, BlurBase, Kind, PixelizeBase, resolve_preset
from .metrics import proxy_metrics
from .pipeline import FrameReport, process_frame, process_sequence
from .segmentation import DetectorConfig, DetectorUnavailable, SidecarFormatError, detect, load_sidecar

__version__ = "0.1.0"
