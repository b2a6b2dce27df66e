"""Bell tests for a single photon split over N modes.

Tools for studying nonlocality of a single photon distributed over N
spatial modes and measured with local displacements plus click detection:
exact correlators on the vacuum/one-photon subspace, the N-party
full-correlation Bell functional, wrapped-Gaussian reference-frame noise,
loss thresholds, and the multi-pair measurement scheme that makes the
violation certain under unknown frames.
"""

from .experiments import (
    MeasurementStrategy,
    SymbolicCorrelatorTable,
    ViolationHistogram,
    bell_value_averaged,
    bell_value_static,
    best_pair_bell_value,
    best_pair_values_over_centers,
    pair_setting_indices,
    pair_symbolic_tables,
    paired_strategy,
    symbolic_correlators,
    two_setting_strategy,
    violation_distribution,
)
from .fock_core import (
    ConsistencyError,
    DisplacementSetting,
    ModeObservable,
    SettingVector,
    SubspaceState,
    correlator,
    correlator_bruteforce,
    displacement_observable,
    lossy_w_state,
    projective_observable,
    w_state,
)
from .optimize import (
    OptimizationSpec,
    OptimumReport,
    ThresholdResult,
    averaged_correlator_table,
    certainty_frontier,
    maximize_bell,
    threshold_efficiency,
)
from .phase_noise import (
    PhaseModel,
    PhasePolynomial,
    average_polynomial,
    child_seed,
    damped_polynomial,
    sample_offsets,
    wrapped_gaussian_pdf,
)
from .wwzb import (
    BellResult,
    CorrelatorTable,
    chsh_horodecki,
    wwzb_value,
    wwzb_value_naive,
)

__version__ = "0.1.0"

__all__ = [
    "BellResult",
    "ConsistencyError",
    "CorrelatorTable",
    "DisplacementSetting",
    "MeasurementStrategy",
    "ModeObservable",
    "OptimizationSpec",
    "OptimumReport",
    "PhaseModel",
    "PhasePolynomial",
    "SettingVector",
    "SubspaceState",
    "SymbolicCorrelatorTable",
    "ThresholdResult",
    "ViolationHistogram",
    "average_polynomial",
    "averaged_correlator_table",
    "bell_value_averaged",
    "bell_value_static",
    "best_pair_bell_value",
    "best_pair_values_over_centers",
    "certainty_frontier",
    "child_seed",
    "chsh_horodecki",
    "correlator",
    "correlator_bruteforce",
    "damped_polynomial",
    "displacement_observable",
    "lossy_w_state",
    "maximize_bell",
    "pair_setting_indices",
    "pair_symbolic_tables",
    "paired_strategy",
    "projective_observable",
    "sample_offsets",
    "symbolic_correlators",
    "threshold_efficiency",
    "two_setting_strategy",
    "violation_distribution",
    "w_state",
    "wrapped_gaussian_pdf",
    "wwzb_value",
    "wwzb_value_naive",
]
