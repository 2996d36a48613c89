"""Quadrature of Ito integrals with exact joint Gaussian sampling.

The shifted Riemann-Maruyama rule works for adapted integrands (including
Poisson paths); the generalized trapezoidal rule is for deterministic
integrands. Convergence studies, Sobolev-Slobodeckij diagnostics and a
command line front end sit on top.
"""

__version__ = "0.1.0"

from .exceptions import MissingDerivative, NotPSD, SingularEvaluation
from .experiment import (
    ConvergenceRow,
    ConvergenceStudy,
    ExperimentConfig,
    StudyResult,
    confidence_interval,
    eoc,
    fit_order,
    lp_error,
    rows_to_csv,
    run_convergence_study,
)
from .integrands import (
    AffineIntegrand,
    Integrand,
    JumpIntegrand,
    PowerIntegrand,
    SineIntegrand,
    parse_integrand,
)
from .processes import PoissonPath, PoissonProcess, sample_poisson_path
from .quadrature import (
    ShiftedGrid,
    UniformGrid,
    build_shifted_grid,
    build_uniform_grid,
    srm_integrate,
    srm_quadrature,
    trap_integrate,
    trap_quadrature,
)
from .sampling import RngStream, cholesky, joint_covariance, sample_joint_increments
from .sobolev import RegularityCheck, check_initial_condition, check_regularity, slobodeckij_seminorm
