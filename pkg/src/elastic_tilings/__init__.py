"""Exact and approximate partition functions for weighted tilings of periodic lattices."""

__version__ = "0.1.0"

from .exact import (  # noqa: E402
    BudgetExceeded,
    PartitionResult,
    exact_partition,
    lemma2_gap_bound,
    universal_bound,
    z0_hat,
    z0_limit,
)
from .kernel import BACKEND, available_backends  # noqa: E402
from .ladder import (  # noqa: E402
    BoundReport,
    choose_alpha,
    closed_form_report,
    ladder_check,
    mass_spectrum,
    z_minus_lower,
    z_plus,
    z_prime,
)
from .lattice import Dissection, Lattice, min_image_distance  # noqa: E402
from .numerics import LogNum, root_estimate_check, stirling_sandwich  # noqa: E402
from .weighting import (  # noqa: E402
    Weighting,
    WeightingFamily,
    build_weighting,
    coarse_average,
    decay_radius,
    placement_mass,
    scale_weighting,
    smoothness,
)
from .conditions import conditions_params, tail_mass_check, verify_conditions  # noqa: E402

__all__ = [
    "BACKEND", "BoundReport", "BudgetExceeded", "Dissection", "Lattice", "LogNum",
    "PartitionResult", "Weighting", "WeightingFamily", "available_backends", "build_weighting",
    "choose_alpha", "closed_form_report", "coarse_average", "conditions_params", "decay_radius",
    "exact_partition", "ladder_check", "lemma2_gap_bound", "mass_spectrum", "min_image_distance",
    "placement_mass", "root_estimate_check", "scale_weighting", "smoothness", "stirling_sandwich",
    "tail_mass_check", "universal_bound", "verify_conditions", "z0_hat", "z0_limit",
    "z_minus_lower", "z_plus", "z_prime",
]
