"""Recovery and sparse approximation of generalized exponential sums.

Signals of the form f(x) = sum_j c_j H(x) exp(alpha_j G(x)) are recovered
from function samples on a warped uniform grid, from derivative samples at
a single point, or from non-equispaced samples, and noisy data is fit by
variable-projection nonlinear least squares.
"""

from .errors import (
    CapabilityError,
    DegeneratePencilError,
    DegenerateStepError,
    DivisionHazardError,
    DomainError,
    ExpsumsError,
    IllPosedError,
    NumericalFailureError,
)
from .model import (
    ExpSumParams,
    GhModel,
    NormalizedSampleSeq,
    SampleGrid,
    derivative_samples,
    gaussian_internal_terms,
    gaussian_physical_terms,
    generalized_shift_eval,
    grid_points,
    make_builtin_model,
    modulated_gaussian_exponent,
    modulated_gaussian_params,
    normalize_samples,
    synthesize,
    validate_grid,
)
from .numerics import (
    HankelSpec,
    PronyPolynomial,
    SvdResult,
    build_hankel,
    log_branch,
    numerical_rank,
    polynomial_roots,
    svd,
    vandermonde_lsq,
)
from .recovery import (
    NodeWarp,
    OperatorWeights,
    SolverReport,
    build_node_warp,
    deflate,
    esprit,
    esprit_nonequispaced,
    operator_weights,
    prony_direct,
    recover_from_derivatives,
    recover_with_known_roots,
)
from .varpro import (
    VarproConfig,
    VarproTrace,
    gauss_newton_step,
    levenberg_marquardt,
    objective_gradient,
    projection_apply,
    residual_jacobian,
    root_update_iterate,
    stationarity_residual,
    vandermonde_pair,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    GridSpec,
    ModelSpec,
    NoiseSpec,
    SolverSpec,
    load_config,
)
from .experiment import (
    PRESET_NAMES,
    ReportRecord,
    add_noise,
    match_parameters,
    preset,
    preset_variants,
    run_experiment,
)

__version__ = "0.1.0"
