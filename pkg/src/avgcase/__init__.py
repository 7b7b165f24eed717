"""Average-case optimal first-order methods for non-symmetric affine operators."""
from .problem import (
    BilinearGameSpec,
    DiskEnsembleSpec,
    DiskMode,
    ProblemInstance,
    distance_to_solution,
    field,
    hamiltonian_field,
    hamiltonian_value,
    make_bilinear_instance,
    make_disk_instance,
)
from .rates import limiting_ratio, xi_asymp, xi_gd, xi_opt
from .recurrence import (
    brute_force_optimal_polynomial,
    disk_recurrence,
    disk_weights,
    mp_coefficients,
    optimal_polynomial_from_recurrence,
    polyak_coefficients,
)
from .solvers import (
    MethodSpec,
    Trajectory,
    Variant,
    run_asymp_bilinear,
    run_asymp_disk,
    run_avg_opt_bilinear,
    run_extragradient,
    run_generic_avg_opt,
    run_gradient_descent,
)
from .spectra import (
    DiskDistribution,
    MarchenkoPastur,
    disk_moment,
    expected_error_quadrature,
    mp_density,
    mp_edges,
    pushforward_bilinear,
)

__version__ = "0.1.0"
