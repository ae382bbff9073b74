"""Band-limited level-set surfaces: recovery from samples, denoising and
anchor-point function representation."""

from importlib import metadata as _metadata

from .cloud import PointCloud, read_cloud_csv, write_cloud_csv
from .denoise import IrlsConfig, denoise, irls, nuclear_norm_surrogate
from .errors import (
    AmbiguousRecovery,
    BandsurfError,
    DegenerateSystem,
    DimensionMismatch,
    DomainError,
    EmptyCloud,
    InsufficientCandidates,
    NoAnnihilator,
    NonFiniteObjective,
    NoZeroSetFound,
    NumericalError,
    ParseError,
)
from .funcrep import AnchorModel, fit_outputs, select_anchors
from .lifting import KernelConfig, feature_matrix, kernel, kernel_gram, lift
from .recovery import (
    NullSpaceBasis,
    PhaseConfig,
    SosSurface,
    nullspace,
    phase_transition,
    recover_minimal,
    recover_sos,
)
from .support import SupportSet, centered_rect, lq_ball_support, rect_support, shift_complement
from .trigpoly import TrigPolynomial, multiply, random_real_poly, sample_zero_set

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "AmbiguousRecovery", "AnchorModel", "BandsurfError", "DegenerateSystem",
    "DimensionMismatch", "DomainError", "EmptyCloud", "InsufficientCandidates",
    "IrlsConfig", "KernelConfig", "NoAnnihilator", "NoZeroSetFound", "NonFiniteObjective",
    "NullSpaceBasis", "NumericalError", "ParseError", "PhaseConfig", "PointCloud",
    "SosSurface", "SupportSet", "TrigPolynomial", "centered_rect", "denoise",
    "feature_matrix", "fit_outputs", "irls", "kernel", "kernel_gram", "lift",
    "lq_ball_support", "multiply", "nuclear_norm_surrogate", "nullspace",
    "phase_transition", "random_real_poly", "read_cloud_csv", "recover_minimal",
    "recover_sos", "rect_support", "sample_zero_set", "select_anchors",
    "shift_complement", "write_cloud_csv",
]
