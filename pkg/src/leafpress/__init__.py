"""leafpress: finite-scale unstable pressure and entropy for linear partially hyperbolic maps."""
from .dynamics import LeafPatch, LinearPHModel, TorusPoint, build_linear_model, iterate, sample_leaf_patch, unstable_cocycle_norm
from .estimators import (
    CoverSolution,
    PressureEstimate,
    bowen_metric_pressure,
    bowen_pressure,
    capacity_pressure,
    entropy_brinkatok,
    entropy_partition,
    restrict_to_regular_set,
    spanning_cost,
    spanning_pressure,
)
from .potentials import PotentialSeq, birkhoff_potential, check_subadditive, lyapunov_exponent, unstable_norm_potential

__version__ = "0.1.0"
