"""Information geometry of bosonic Gaussian thermal states."""

from .errors import (
    CutoffTooSmall,
    DimensionMismatch,
    GaussThermError,
    IllConditioned,
    NotFaithful,
    NotPositiveDefinite,
    NotSymmetric,
    NotSymplectic,
    SingularMatrix,
    SingularPoint,
)
from .geometry import (
    DEFAULT_MEAN_PREFACTOR,
    MEAN_PREFACTOR_CANDIDATES,
    IndexMode,
    InfoKind,
    InfoMatrix,
    ParameterIndex,
    bures_line_element,
    crb_scalar,
    duplication_jacobian,
    fisher_bures,
    km_line_element,
    kubo_mori,
    parameter_indices,
)
from .kernels import (
    KernelKind,
    QuadratureConfig,
    kernel_ft,
    p_density,
    q_density,
    weighted_congruence_integral,
    weighted_evolution_integral,
    weighted_fourth_moment_integral,
)
from .observables import (
    QuadraticObservable,
    StateDerivative,
    gaussian_expectation,
    sld,
    state_derivative,
)
from .symplectic import (
    GaussianThermalState,
    MatrixKind,
    SignConvention,
    WilliamsonDecomposition,
    cov_from_ham,
    ham_from_cov,
    ham_from_williamson,
    log_partition_function,
    omega,
    partition_function,
    symplectic_eigenvalues,
    symplectic_evolution,
    validate_state,
    williamson,
)

__version__ = "0.1.0"
