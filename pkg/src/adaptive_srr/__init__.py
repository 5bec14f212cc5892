"""Adaptive super-resolution of image sequences (LMS, R-LMS, TSR-LMS, LTSR-LMS)."""
from .motion import Motion, apply_warp, apply_warp_transpose
from .operators import (
    Decimator,
    DimensionError,
    KernelOperator,
    OperatorSet,
    TemporalInverse,
    identity_kernel,
    laplacian,
    uniform_blur,
)
from .srr import (
    TABLE_OUTLIER,
    TABLE_OUTLIER_FREE,
    Algorithm,
    DivergenceError,
    Reconstructor,
    SrrParams,
    SrrState,
    bicubic_init,
    run_sequence,
)
from .synth import OutlierSpec, SequenceSpec, synthesize

__version__ = "0.1.0"

__all__ = [
    "Motion",
    "apply_warp",
    "apply_warp_transpose",
    "Decimator",
    "DimensionError",
    "KernelOperator",
    "OperatorSet",
    "TemporalInverse",
    "identity_kernel",
    "laplacian",
    "uniform_blur",
    "TABLE_OUTLIER",
    "TABLE_OUTLIER_FREE",
    "Algorithm",
    "DivergenceError",
    "Reconstructor",
    "SrrParams",
    "SrrState",
    "bicubic_init",
    "run_sequence",
    "OutlierSpec",
    "SequenceSpec",
    "synthesize",
]
