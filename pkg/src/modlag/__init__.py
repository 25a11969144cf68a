"""modlag: modified equations and modified Lagrangians of variational
integrators.

Symbolic pipeline (exact rational arithmetic):

    continuous Lagrangian
      -> discrete Lagrangian (catalog of variational integrators)
      -> midpoint h-expansion L_disc([x], h)
      -> Euler-Maclaurin meshed modified Lagrangian L_mesh([x], h)
      -> Euler-Lagrange residual series
      -> modified equation xdd = F(x, xd, h)  (order-by-order elimination)
      -> classical modified Lagrangian L_mod,k and modified Hamiltonian

plus a numerical laboratory for defect-order studies and trajectory
comparisons, and a CLI (``modlag derive|check|study``).
"""

from .catalog import (
    METHODS,
    DifferenceEquation,
    DiscreteLagrangian,
    build_discrete_lagrangian,
    discrete_EL,
    discrete_legendre,
    expand_discrete_lagrangian,
    expand_psi,
)
from .grammar import ParseError, parse, parse_scalar, parse_vec, print_expr
from .jets import (
    el_residual,
    euler_lagrange_residual,
    jet_order,
    total_time_derivative,
    variational_derivative,
)
from .mesh import bernoulli, em_coefficient, meshed_modified_lagrangian
from .modeq import (
    DerivativeClosure,
    FirstOrderModifiedEquation,
    ModifiedEquation,
    SingularMassError,
    cross_validate,
    eliminate,
    mesh_route,
    modified_equation_first_order,
    modified_equation_second_order,
    solve_EL_recursively,
)
from .modlagrangian import (
    ModifiedHamiltonian,
    ModifiedLagrangian,
    classical_modified_lagrangian,
    gauge_equivalent,
    legendre_inverse,
    legendre_transform,
    verify_theorem,
)
from .presets import PRESET_NAMES, Preset, get_preset
from .series import HSeries

__version__ = "1.0.0"
