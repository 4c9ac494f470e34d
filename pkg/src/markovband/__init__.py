"""Numerical laboratory for banded random matrices driven by Markov
variance profiles: transition kernels and their stable limits, ribbon
diagram evaluation, trace-moment estimators, edge statistics, and the
config-driven experiments tying them together."""

from ._util import BudgetError, FeasibilityError, ValidationError
from .kernels import (
    ProfileSpec,
    TorusChain,
    cached_chain,
    export_kernel_csv,
    hankel_step,
    n_step_fft,
    wegner_block_kernel,
)
from .special import (
    reference_cdf,
    reference_moments,
    skellam_kernel,
    stable_density,
    theta_alpha,
)
from .comparison import (
    avg_upper_bound_b,
    comparison_report,
    lclt_residual,
)
from .chebyshev import (
    MomentRequest,
    linearize_power,
    mixed_chebyshev_moment,
    sinc_statistic,
)
from .diagrams import (
    Diagram,
    SpikeOperator,
    catalog_names,
    diagram_function,
    diagram_upper_bound,
    lattice_constant_C,
    limiting_diagram_function,
    load_diagram,
)
from .ensembles import (
    EdgeSampleSet,
    EnsembleSpec,
    deviation_bound_curve,
    deviation_exponents,
    edge_observables,
    entry_moment_theta,
    gaussian_reference,
    gumbel_reference,
    ks_distance,
    run_edge_samples,
    sample_matrix,
    scaling_parameters,
    tracy_widom_reference,
)
from .experiments import (
    ExperimentConfig,
    emit_plot_data,
    parse_config,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "Diagram",
    "EdgeSampleSet",
    "EnsembleSpec",
    "ExperimentConfig",
    "FeasibilityError",
    "MomentRequest",
    "ProfileSpec",
    "SpikeOperator",
    "TorusChain",
    "ValidationError",
    "avg_upper_bound_b",
    "cached_chain",
    "catalog_names",
    "comparison_report",
    "deviation_bound_curve",
    "deviation_exponents",
    "diagram_function",
    "diagram_upper_bound",
    "edge_observables",
    "emit_plot_data",
    "entry_moment_theta",
    "export_kernel_csv",
    "gaussian_reference",
    "gumbel_reference",
    "hankel_step",
    "ks_distance",
    "lattice_constant_C",
    "lclt_residual",
    "limiting_diagram_function",
    "linearize_power",
    "load_diagram",
    "mixed_chebyshev_moment",
    "n_step_fft",
    "parse_config",
    "reference_cdf",
    "reference_moments",
    "run_edge_samples",
    "run_experiment",
    "sample_matrix",
    "scaling_parameters",
    "sinc_statistic",
    "skellam_kernel",
    "stable_density",
    "theta_alpha",
    "tracy_widom_reference",
    "wegner_block_kernel",
]
