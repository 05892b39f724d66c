"""Tabular regularized MDPs: solver, occupancies, Bregman divergences and identity checks."""

from .errors import (
    ConvergenceError,
    DomainError,
    MdpFormatError,
    NumericalBreakdown,
    PreconditionError,
    ShapeError,
    ValidationError,
)
from .identities import (
    NormalConeCertificate,
    VerificationReport,
    check_basic_lemma,
    check_kl_corollary,
    check_main_theorem,
    check_normal_cone,
    check_pdl,
    check_relint_lemma,
    verify_instance,
)
from .mdp import (
    Mdp,
    Policy,
    ValidationResult,
    boundary_mdp,
    induced_transition,
    load_mdp,
    load_policy,
    random_mdp,
    random_policy,
    save_mdp,
    save_policy,
    stationary_distribution,
    validate_mdp,
    validate_policy,
)
from .regularizers import (
    NegEntropy,
    Regularizer,
    Separable,
    SimplexMaxResult,
    SquaredNorm,
    bregman,
    grad_omega,
    is_relint,
    kl_divergence,
    omega,
    parse_regularizer,
    power,
    simplex_max,
)
from .solver import ValueSolution, bellman_residual, evaluate_policy, solve_optimal
from .sweep import SweepConfig, SweepInstance, instances

__version__ = "0.1.0"
