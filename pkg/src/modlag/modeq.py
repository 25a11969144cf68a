"""Modified equations by order-by-order elimination.

Given a residual series R(h) = E_0 + h E_1 + ... (vector-valued, in jet
variables), we seek the unique series xdd = F(x, xd, h) = f_0 + h f_1 + ...
such that substituting the derivative closure x^(m) -> F^m (obtained by
repeated total differentiation with xdd-replacement) makes R vanish to the
requested order.  The unknown f_j appears linearly through the
xdd-dependence of E_0, whose linearization (the mass operator) must be a
rational multiple of the identity or of a registered linear map with a
declared inverse.

The same elimination with the unknown in the xd slot yields modified
equations of first-order difference equations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .catalog import (
    XNEXT,
    XPREV,
    DifferenceEquation,
    DiscreteLagrangian,
    discrete_EL,
    expand_discrete_lagrangian,
    expand_psi,
)
from .expr import (
    Jet,
    LApp,
    Q,
    VSym,
    Vec,
    VZERO,
    const_value,
    contains_vatom,
    is_const,
    jvp_v,
    lapp,
    map_info,
    max_jet_vec,
    snum,
    subst_v,
    vadd,
    vatom,
    vscale,
)
from .jets import euler_lagrange_residual
from .mesh import meshed_modified_lagrangian
from .series import (
    HSeries,
    compose_series,
    compose_vector,
    dt_series,
    hadd,
    series_equal,
    taylor_shift,
    truncate,
    vzero_series,
)

_PROBE = VSym("_w")


@dataclass(frozen=True)
class ModifiedEquation:
    """xdd = sum_i h^i f_i(x, xd), truncated at `order`."""
    order: int
    series: HSeries
    source: str

    @property
    def coeffs(self):
        return self.series.coeffs


@dataclass(frozen=True)
class FirstOrderModifiedEquation:
    """xd = sum_i h^i f_i(x), truncated at `order`."""
    order: int
    series: HSeries
    source: str

    @property
    def coeffs(self):
        return self.series.coeffs


@dataclass(frozen=True)
class DerivativeClosure:
    """Series F^j for x^(j), j >= slot, each with coefficients in jets < slot."""
    slot: int
    order: int
    series: dict  # {j: HSeries}

    def subs(self):
        return {Jet(j): s for j, s in self.series.items()}


class SingularMassError(ValueError):
    pass


def linear_solver(E0: Vec, key, jet_bound: int):
    """Return v -> mass^{-1} v for the linearization of E0 in `key`.

    `key` is the solved-for vector atom (a jet or a vector symbol).  Checks
    that the dependence is exactly linear, that the operator's coefficient
    contains no jet above `jet_bound`, and that the operator is c * Id or
    c * Map with declared inverse.
    """
    probe = vatom(_PROBE)
    lin = jvp_v(E0, {key: probe})
    if max_jet_vec(lin) > jet_bound:
        raise SingularMassError(
            "leading residual is not autonomous-linear in the solved atom")
    # linearity: E0(..., v) = E0(..., 0) + lin|_{probe->v}
    at_zero = subst_v(E0, {key: VZERO})
    recon = subst_v(lin, {_PROBE: vatom(key)})
    if vadd(at_zero, recon) != E0:
        raise SingularMassError("leading residual is nonlinear in the solved atom")
    if len(lin.items) != 1:
        raise SingularMassError(f"unsupported mass operator: {lin}")
    c, atom = lin.items[0][0], lin.items[0][1]
    if not is_const(c) or const_value(c) == 0:
        raise SingularMassError(f"mass coefficient not a nonzero constant: {c}")
    cval = const_value(c)
    if atom == _PROBE:
        return lambda v: vscale(snum(-1 / cval), v)
    if isinstance(atom, LApp) and atom.arg == _PROBE:
        inv = map_info(atom.map).inverse
        if inv is None:
            raise SingularMassError(
                f"linear map {atom.map!r} has no declared inverse")
        return lambda v: vscale(snum(-1 / cval), lapp(inv, v))
    raise SingularMassError(f"unsupported mass operator atom: {atom}")


def _mass_solver(E0: Vec, slot: int):
    return linear_solver(E0, Jet(slot), slot - 1)


def build_closure(F: HSeries, slot: int, up_to: int) -> DerivativeClosure:
    """Derivative closures x^(j) = F^j for j = slot .. up_to."""
    series = {slot: F}
    cur = F
    for j in range(slot + 1, up_to + 1):
        cur = compose_series(dt_series(cur), {Jet(slot): F})
        series[j] = cur
    return DerivativeClosure(slot, F.order, series)


def eliminate(residual: HSeries, k: int, slot: int = 2):
    """Solve the residual series for the slot jet, order by order."""
    residual = truncate(residual, k) if residual.order > k else residual
    if residual.order < k:
        raise ValueError("residual series shorter than requested order")
    solve = _mass_solver(residual.coeffs[0], slot)
    top_jet = max(max_jet_vec(c) for c in residual.coeffs)
    top_jet = max(top_jet, slot)
    F = vzero_series(k)
    for j in range(k + 1):
        closure = build_closure(F, slot, top_jet)
        defect = compose_series(residual, closure.subs(), k)
        fj = solve(defect.coeffs[j])
        if max_jet_vec(fj) >= slot:
            raise ValueError(
                f"coefficient f_{j} depends on jets of order >= {slot}")
        F = hadd(F, HSeries(k, tuple(
            fj if i == j else VZERO for i in range(k + 1))))
    closure = build_closure(F, slot, top_jet)
    final = compose_series(residual, closure.subs(), k)
    for j in range(k + 1):
        if final.coeffs[j] != VZERO:
            raise AssertionError(f"elimination left a nonzero defect at h^{j}")
    return F, closure


def modified_equation_second_order(De: DifferenceEquation, k: int) -> ModifiedEquation:
    """Modified equation of a three-point difference equation."""
    residual = expand_psi(De, k)
    F, _ = eliminate(residual, k, slot=2)
    return ModifiedEquation(k, F, "from_difference_equation")


def modified_equation_first_order(psi: Vec, k: int) -> FirstOrderModifiedEquation:
    """Modified equation of a two-point difference equation.

    psi is a vector expression in xprev, xnext, h, consistent with a
    first-order equation g(x, xd) = 0 solvable for xd.
    """
    sub = {XPREV: taylor_shift(0, k + 1), XNEXT: taylor_shift(1, k + 1)}
    residual = compose_vector(psi, sub, k)
    F, _ = eliminate(residual, k, slot=1)
    return FirstOrderModifiedEquation(k, F, "from_difference_equation")


def solve_EL_recursively(residual: HSeries, k: int):
    """Solve a meshed-Lagrangian EL residual series for xdd."""
    F, closure = eliminate(residual, k, slot=2)
    return ModifiedEquation(k, F, "from_mesh_lagrangian"), closure


def mesh_route(Ld: DiscreteLagrangian, k: int):
    """Full Lagrangian route: L_disc series -> L_mesh -> residual -> modeq."""
    Ldisc = expand_discrete_lagrangian(Ld, k)
    mesh = meshed_modified_lagrangian(Ldisc, k)
    residual = euler_lagrange_residual(mesh)
    modeq, closure = solve_EL_recursively(residual, k)
    return Ldisc, mesh, residual, modeq, closure


def cross_validate(Ld: DiscreteLagrangian, k: int) -> dict:
    """Check that the difference-equation route and the meshed-Lagrangian
    route produce the same modified equation."""
    De = discrete_EL(Ld)
    direct = modified_equation_second_order(De, k)
    _, _, _, lagr, _ = mesh_route(Ld, k)
    mismatches = [j for j in range(k + 1)
                  if direct.coeffs[j] != lagr.coeffs[j]]
    return {
        "order": k,
        "equal": not mismatches,
        "mismatch_orders": mismatches,
        "direct": direct,
        "lagrangian": lagr,
    }
