"""Kac-Murdock-Szego matrices: spectra, determinants, limit-theorem checks."""

from .asymptotics import (
    det_ratio,
    es_limit,
    kac_det_ratio_sweep,
    kac_jump_prediction,
    kac_limit,
    log_det,
    ms_limit,
    widom_correction,
)
from .errors import (
    BranchError,
    ConfigError,
    DomainError,
    ExprParseError,
    KmsError,
    SchemeError,
    ShapeError,
    SingularSymbolError,
    SizeCapError,
    SolverError,
    WindingError,
)
from .matgen import (
    MAX_INDEX,
    MIDPOINT,
    MIN_INDEX,
    ROW_INDEX,
    IndexingScheme,
    MatrixRealization,
    build_kms,
    build_lame,
    build_rectangular,
    build_schrodinger,
    dump_matrix,
    dumps_matrix,
    parse_scheme,
    shifted,
    tagged,
)
from .spectra import (
    SpectralSummary,
    TestFunction,
    cluster_fraction,
    eigenvalues,
    empirical_mean,
    lsd_integral,
    moment_trace,
    singular_values,
)
from .symbol import (
    BandSymbol,
    PiecewisePotential,
    RegionMask,
    SzegoConstants,
    band_norm,
    eval_symbol,
    extended_range,
    log_fourier_coefficients,
    szego_constants,
)

__all__ = [
    "BandSymbol",
    "BranchError",
    "ConfigError",
    "DomainError",
    "ExprParseError",
    "IndexingScheme",
    "KmsError",
    "MatrixRealization",
    "MAX_INDEX",
    "MIDPOINT",
    "MIN_INDEX",
    "PiecewisePotential",
    "RegionMask",
    "ROW_INDEX",
    "SchemeError",
    "ShapeError",
    "SingularSymbolError",
    "SizeCapError",
    "SolverError",
    "SpectralSummary",
    "SzegoConstants",
    "TestFunction",
    "WindingError",
    "band_norm",
    "build_kms",
    "build_lame",
    "build_rectangular",
    "build_schrodinger",
    "cluster_fraction",
    "det_ratio",
    "dump_matrix",
    "dumps_matrix",
    "eigenvalues",
    "empirical_mean",
    "es_limit",
    "eval_symbol",
    "extended_range",
    "kac_det_ratio_sweep",
    "kac_jump_prediction",
    "kac_limit",
    "log_det",
    "log_fourier_coefficients",
    "lsd_integral",
    "moment_trace",
    "ms_limit",
    "parse_scheme",
    "shifted",
    "singular_values",
    "szego_constants",
    "tagged",
    "widom_correction",
]

__version__ = "0.1.0"
