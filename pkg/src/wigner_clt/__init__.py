"""Numerical checks of central limit theorems for linear eigenvalue statistics
of generalized Wigner matrices."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConstructionError,
    ConvergenceError,
    DomainError,
    HypothesisViolation,
    NearSingularityError,
    NumericError,
    WignerCLTError,
)
from .semicircle import control_params, density, kappa, stieltjes  # noqa: E402
from .profile import (  # noqa: E402
    VarianceProfile,
    build_flat,
    build_from_kernel,
    kernel_trace,
    spectral_data,
    stability_report,
    t_theory_matrix,
    validate,
)
from .ensemble import EnsembleSpec, fourth_cumulant_sum, sample  # noqa: E402
from .spectral import (  # noqa: E402
    TestFunction,
    bump,
    centered_statistic,
    cosine_window,
    eigenvalues,
    gaussian,
    kappa0,
    resolvent,
    trace_f_hs,
)
from .theory import (  # noqa: E402
    ContourSpec,
    TheoryPrediction,
    almost_analytic,
    bias_Bf,
    bulk_limit,
    edge_limit,
    predict,
    variance_Vf,
)
