"""Euler-Maclaurin midpoint correction: from L_disc to L_mesh.

The meshed modified Lagrangian is

    L_mesh = sum_i c_i h^(2i) (d/dt)^(2i) L_disc,
    c_i = (2^(1-2i) - 1) B_{2i} / (2i)!,

so that the midpoint sum h * sum_j L_disc(jh - h/2) formally equals the
integral of L_mesh (Euler-Maclaurin midpoint rule).  The first
coefficients are 1, -1/24, 7/5760.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .expr import Q, max_jet
from .series import HSeries, dt_series, hadd, hscale, mul_h_power, truncate


def bernoulli(n: int) -> Fraction:
    """Exact Bernoulli number B_n (convention B_1 = -1/2).

    Akiyama-Tanigawa algorithm; the triangle yields the B_1 = +1/2
    convention, so odd index 1 is negated.
    """
    if n < 0:
        raise ValueError("Bernoulli index must be nonnegative")
    a = [Q(0)] * (n + 1)
    for m in range(n + 1):
        a[m] = Q(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
    b = a[0]
    return -b if n == 1 else b


def em_coefficient(i: int) -> Fraction:
    """c_i = (2^(1-2i) - 1) B_{2i} / (2i)!."""
    return (Q(2) ** (1 - 2 * i) - 1) * bernoulli(2 * i) / math.factorial(2 * i)


def meshed_modified_lagrangian(Ldisc: HSeries, order: int) -> HSeries:
    """L_mesh = sum_i c_i h^(2i) D_t^(2i) L_disc, truncated at `order`.

    Checks Proposition-style jet bounds: the h^l coefficient of the result
    contains no jet variable of order > l for l >= 1 (and none > 1 at
    l = 0).
    """
    if Ldisc.order < order:
        raise ValueError("L_disc series shorter than requested order")
    out = truncate(Ldisc, order)
    term = Ldisc
    for i in range(1, order // 2 + 1):
        term = dt_series(dt_series(term))
        shifted = mul_h_power(truncate(term, order - 2 * i), 2 * i, order)
        out = hadd(out, hscale(em_coefficient(i), shifted))
    for ell, c in enumerate(out.coeffs):
        bound = max(ell, 1)
        got = max_jet(c)
        if got > bound:
            raise ValueError(
                f"L_mesh coefficient {ell} depends on jet order {got} "
                f"(bound {bound})")
    return out


def euler_maclaurin_check(f, fint, a: float, b: float, orders=(0, 1, 2),
                          ladder=(4, 8, 16, 32)):
    """Numerical check of the midpoint Euler-Maclaurin formula.

    For each number of correction terms m in `orders`, compares the
    midpoint sum of f on [a, b] against the exact integral corrected with
    the derivative terms, over a ladder of subdivision counts, and fits
    the observed convergence order.

    f(x, k) must return the k-th derivative of f; fint is the exact
    integral over [a, b].  Returns a list of (m, defects, fitted slope).
    """
    import numpy as np

    results = []
    for m in orders:
        defects = []
        hs = []
        for n in ladder:
            h = (b - a) / n
            xs = a + h * (np.arange(n) + 0.5)
            s = h * sum(f(x, 0) for x in xs)
            corr = fint
            for i in range(1, m + 1):
                c = float(em_coefficient(i))
                corr += c * h ** (2 * i) * (f(b, 2 * i - 1) - f(a, 2 * i - 1))
            defects.append(abs(s - corr))
            hs.append(h)
        logs = np.log(np.array(defects, dtype=float) + 1e-300)
        slope = float(np.polyfit(np.log(hs), logs, 1)[0])
        results.append((m, defects, slope))
    return results
