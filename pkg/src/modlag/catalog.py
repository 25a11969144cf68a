"""Built-in discrete Lagrangians, their h-expansions, discrete
Euler-Lagrange residuals, and the discrete-Legendre map.

A discrete Lagrangian is a scalar expression in the vector symbols
``xprev``, ``xnext`` and the scalar ``h``.  A difference-equation residual
Psi is a vector expression in ``xm``, ``xc``, ``xp`` (three consecutive
mesh points) and ``h``, stored exactly as D2 Ld(xm,xc,h) + D1 Ld(xc,xp,h)
without rescaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .expr import (
    Jet,
    Q,
    Scalar,
    VSym,
    Vec,
    grad_s,
    max_jet,
    sadd,
    sinv,
    snum,
    sscale,
    ssym,
    subst_s,
    subst_v,
    vadd,
    vatom,
    vneg,
    vscale,
    vsub,
)
from .series import HSeries, compose_scalar, compose_vector, taylor_shift

XPREV = VSym("xprev")
XNEXT = VSym("xnext")
XM, XC, XP = VSym("xm"), VSym("xc"), VSym("xp")

METHODS = ("midpoint", "stormer_verlet", "sympl_euler_A", "sympl_euler_B")


def _two_point(L: Scalar, point: Vec) -> Scalar:
    """L evaluated at a position expression and the difference velocity."""
    vel = vscale(sinv(ssym("h")), vsub(vatom(XNEXT), vatom(XPREV)))
    return subst_s(L, {Jet(0): point, Jet(1): vel})


@dataclass(frozen=True)
class DiscreteLagrangian:
    method: str
    expr: Scalar            # in xprev, xnext, h
    source: Scalar          # continuous density in x, xd


@dataclass(frozen=True)
class DifferenceEquation:
    psi: Vec                # in xm, xc, xp, h
    target: Vec             # g(x, xd, xdd): order-0 coefficient of the expansion
    source: DiscreteLagrangian | None = None


def build_discrete_lagrangian(method: str, L: Scalar,
                              expr: Scalar | None = None) -> DiscreteLagrangian:
    """Construct a catalog (or custom) discrete Lagrangian and verify
    consistency: the order-0 term of its expansion must equal L."""
    if max_jet(L) > 1:
        raise ValueError("continuous Lagrangian must depend on x, xd only")
    if method == "custom":
        if expr is None:
            raise ValueError("custom method needs an expression")
        ld = expr
    elif method == "midpoint":
        mid = vscale(snum(Q(1, 2)), vadd(vatom(XPREV), vatom(XNEXT)))
        ld = _two_point(L, mid)
    elif method == "stormer_verlet":
        a = _two_point(L, vatom(XPREV))
        b = _two_point(L, vatom(XNEXT))
        ld = sadd(sscale(Q(1, 2), a), sscale(Q(1, 2), b))
    elif method == "sympl_euler_A":
        ld = _two_point(L, vatom(XPREV))
    elif method == "sympl_euler_B":
        ld = _two_point(L, vatom(XNEXT))
    else:
        raise ValueError(f"unsupported method tag {method!r}")
    out = DiscreteLagrangian(method, ld, L)
    series = expand_discrete_lagrangian(out, 0)
    if series.coeffs[0] != L:
        raise ValueError(f"{method}: not a consistent discretization")
    return out


def expand_discrete_lagrangian(Ld: DiscreteLagrangian, order: int) -> HSeries:
    """L_disc([x], h): expansion about the interval midpoint."""
    sub = {XPREV: taylor_shift(Q(-1, 2), order + 2),
           XNEXT: taylor_shift(Q(1, 2), order + 2)}
    return compose_scalar(Ld.expr, sub, order)


def discrete_EL(Ld: DiscreteLagrangian) -> DifferenceEquation:
    """Psi(xm, xc, xp, h) = D2 Ld(xm, xc, h) + D1 Ld(xc, xp, h)."""
    d1 = grad_s(Ld.expr, XPREV)
    d2 = grad_s(Ld.expr, XNEXT)
    psi = vadd(subst_v(d2, {XPREV: vatom(XM), XNEXT: vatom(XC)}),
               subst_v(d1, {XPREV: vatom(XC), XNEXT: vatom(XP)}))
    target = expand_psi_vec(psi, 0).coeffs[0]
    return DifferenceEquation(psi, target, Ld)


def expand_psi_vec(psi: Vec, order: int) -> HSeries:
    """Taylor expansion of a three-point residual about the center point."""
    sub = {XM: taylor_shift(Q(-1), order + 2),
           XC: taylor_shift(Q(0), order + 2),
           XP: taylor_shift(Q(1), order + 2)}
    return compose_vector(psi, sub, order)


def expand_psi(De: DifferenceEquation, order: int) -> HSeries:
    return expand_psi_vec(De.psi, order)


@dataclass(frozen=True)
class DiscreteLegendre:
    """Generating-function form of the one-step symplectic map.

    The discrete action is sum_j h Ld(x_j, x_{j+1}, h), so h*Ld is the
    generating function: p_j = -h D1 Ld(x_j, x_{j+1}, h) and
    p_{j+1} = h D2 Ld(x_j, x_{j+1}, h).
    """
    p_prev: Vec             # -h D1 Ld, in xprev, xnext, h
    p_next: Vec             # +h D2 Ld, in xprev, xnext, h
    Ld: DiscreteLagrangian = field(repr=False, default=None)


def discrete_legendre(Ld: DiscreteLagrangian) -> DiscreteLegendre:
    h = ssym("h")
    d1 = grad_s(Ld.expr, XPREV)
    d2 = grad_s(Ld.expr, XNEXT)
    return DiscreteLegendre(vneg(vscale(h, d1)), vscale(h, d2), Ld)
