"""Projective cone metrics, Birkhoff contraction, and filter stability.

Modules: `cones` (Hilbert/Thompson distances on three cones), `maps`
(positive linear maps and contraction coefficients), `hmm` and `kalman`
(the two filters whose stability those metrics govern), `gaussian` (exact
Gaussian inference), `lab` (randomized experiments), `modelio` (JSON/CSV
artifacts), `figures` (report figures; imported lazily to keep matplotlib
off the import path), and `cli`.
"""

from . import cones, gaussian, hmm, kalman, lab, maps, modelio
from .cones import (
    ConeVector,
    ExtendedDistance,
    SpdMatrix,
    hilbert_distance_measures,
    hilbert_distance_orthant,
    hilbert_distance_spd,
    order_bounds_orthant,
    thompson_distance_spd,
)
from .gaussian import (
    GaussianDist,
    gaussian_hilbert_comparability,
    linear_conditional,
    linear_marginal,
    log_density,
)
from .hmm import FilterTrace, HmmModel, ImpossibleObservationError
from .kalman import (
    DareResult,
    EquivalenceReport,
    KalmanState,
    LinearGaussianModel,
    RiccatiNonConvergenceError,
    dare_fixed_point,
    kalman_vs_hmm_equivalence,
    riccati_map_gain_form,
    riccati_map_information_form,
)
from .lab import (
    DegenerateSampleError,
    ExperimentConfig,
    ExperimentReport,
    run_experiment,
)
from .maps import (
    ContractionReport,
    PositiveLinearMap,
    apply_map,
    birkhoff_coefficient,
    empirical_contraction_ratio,
    projective_diameter,
)

__version__ = "0.1.0"

__all__ = [
    "ConeVector",
    "ContractionReport",
    "DareResult",
    "DegenerateSampleError",
    "EquivalenceReport",
    "ExperimentConfig",
    "ExperimentReport",
    "ExtendedDistance",
    "FilterTrace",
    "GaussianDist",
    "HmmModel",
    "ImpossibleObservationError",
    "KalmanState",
    "LinearGaussianModel",
    "PositiveLinearMap",
    "RiccatiNonConvergenceError",
    "SpdMatrix",
    "apply_map",
    "birkhoff_coefficient",
    "cones",
    "dare_fixed_point",
    "empirical_contraction_ratio",
    "gaussian",
    "gaussian_hilbert_comparability",
    "hilbert_distance_measures",
    "hilbert_distance_orthant",
    "hilbert_distance_spd",
    "hmm",
    "kalman",
    "kalman_vs_hmm_equivalence",
    "lab",
    "linear_conditional",
    "linear_marginal",
    "log_density",
    "maps",
    "modelio",
    "order_bounds_orthant",
    "projective_diameter",
    "riccati_map_gain_form",
    "riccati_map_information_form",
    "run_experiment",
    "thompson_distance_spd",
]
