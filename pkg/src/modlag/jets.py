"""Jet-space operators on Lagrangian densities.

A Lagrangian density is a ``Scalar`` over jet variables x, xd, xdd, ...;
series densities are ``HSeries`` with such coefficients.  This module
provides the total time derivative, variational derivatives, and the
Euler-Lagrange residual of a series density.

Two related operators live here and must not be confused:

* ``variational_derivative(L, j)`` is the full variational derivative
  delta L / delta x^(j) = sum_i (-1)^i (d/dt)^i dL/dx^(j+i).  For j = 0 it
  annihilates total time derivatives (null Lagrangians), which is why the
  meshed and discrete Lagrangian series share Euler-Lagrange equations.

* ``el_residual(L)`` is the first-order Euler-Lagrange operator
  dL/dx - d/dt dL/dxd.  For densities depending on higher jets this is the
  residual of the meshed variational problem: the contributions of jets of
  order >= 2 are absorbed by the natural interior conditions, so the
  modified-equation recursion consumes this operator, whose coefficients
  satisfy the jet bound E_k = E_k(x, ..., x^(k+1)).

For first-order densities (jets <= 1) the two coincide.
"""

from __future__ import annotations

from .expr import (
    Jet,
    Q,
    Scalar,
    Vec,
    dt_s,
    dt_v,
    grad_s,
    max_jet,
    max_jet_vec,
    vadd,
    vneg,
    vscale,
    snum,
    vsub,
    VZERO,
)
from .series import HSeries, taylor_shift  # re-exported  # noqa: F401

total_time_derivative = dt_s


def jet_order(L: Scalar) -> int:
    """Highest jet order occurring in a density (-1 if none)."""
    return max_jet(L)


def variational_derivative(L: Scalar, j: int) -> Vec:
    """delta L / delta x^(j) = sum_i (-1)^i (d/dt)^i dL/dx^(j+i)."""
    if j < 0:
        raise ValueError("jet index must be nonnegative")
    m = max_jet(L)
    out = VZERO
    sign = 1
    for i in range(0, m - j + 1):
        g = grad_s(L, Jet(j + i))
        for _ in range(i):
            g = dt_v(g)
        out = vadd(out, vscale(snum(Q(sign)), g))
        sign = -sign
    return out


def el_residual(L: Scalar) -> Vec:
    """First-order Euler-Lagrange operator dL/dx - d/dt dL/dxd."""
    return vsub(grad_s(L, Jet(0)), dt_v(grad_s(L, Jet(1))))


def euler_lagrange_residual(L: HSeries, check: bool = True) -> HSeries:
    """Residual series E_0 + h E_1 + ... of a series density.

    Applies the first-order Euler-Lagrange operator coefficient-wise and
    (by default) checks the dependency bound: E_k contains no jet variable
    of order > max(k, 1) + 1.  A violation signals an upstream consistency
    bug (the input was not a meshed-Lagrangian-type series).
    """
    coeffs = []
    for k in range(L.order + 1):
        e = el_residual(L.coeffs[k])
        if check:
            bound = max(k, 1) + 1
            got = max_jet_vec(e)
            if got > bound:
                raise ValueError(
                    f"residual coefficient {k} depends on jet order {got} "
                    f"(bound {bound})")
        coeffs.append(e)
    return HSeries(L.order, tuple(coeffs))


def variational_derivative_series(L: HSeries, j: int) -> HSeries:
    """Full variational derivative applied coefficient-wise."""
    return HSeries(L.order, tuple(variational_derivative(c, j) for c in L.coeffs))
