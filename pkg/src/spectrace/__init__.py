"""Eigenvalue recovery for affine dynamical systems observed on a coordinate subset."""

from .estimators import (
    EstimatorConfig,
    SpectrumEstimate,
    companion_roots,
    continuous_log_map,
    esprit,
    estimate,
    matrix_pencil,
    pinv_thresholded,
    prony,
)
from .fitting import fit_linear_system, normalize_columns
from .hankel import HankelPair, RankEstimate, build_hankel, estimate_rank, jordan_factorization, permute_stacked
from .metrics import hausdorff, ine, match_spectra, rmse
from .recoverability import (
    annihilator_degree,
    effective_vector,
    is_universal,
    min_poly_degree,
    penthouse,
    recoverable_set_jordan,
    recoverable_set_numeric,
)
from .systems import (
    AffineSystem,
    JordanSpec,
    ObservedSeries,
    Trajectory,
    build_from_jordan,
    difference_transform,
    observe,
    simulate_continuous,
    simulate_discrete,
)

__version__ = "0.1.0"
