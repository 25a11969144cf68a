"""Jet calculus: variational derivatives, EL residuals, null Lagrangians."""

from __future__ import annotations

import random

from conftest import random_density, random_scalar

from modlag.expr import Jet, VZERO, dt_s, max_jet_vec
from modlag.grammar import parse, parse_scalar
from modlag.jets import (
    el_residual,
    euler_lagrange_residual,
    jet_order,
    variational_derivative,
)
from modlag.series import series_of_scalar


def test_el_residual_of_mechanical_lagrangian():
    L = parse_scalar("1/2*norm2(xd) - U(0)")
    assert el_residual(L) == parse("-xdd - U(1)")


def test_variational_derivative_equals_el_for_first_order_densities():
    rng = random.Random(5)
    for _ in range(20):
        L = random_density(rng, max_jet=1)
        assert variational_derivative(L, 0) == el_residual(L)


def test_null_lagrangian_annihilation():
    rng = random.Random(9)
    for _ in range(20):
        F = random_scalar(rng, max_jet=2, depth=2)
        assert variational_derivative(dt_s(F), 0) == VZERO


def test_gauge_invariance_of_el_coefficients():
    rng = random.Random(21)
    for _ in range(20):
        L = random_density(rng, max_jet=1)
        F = random_scalar(rng, max_jet=0, depth=2)   # F = F(x)
        gauged = __import__("modlag.expr", fromlist=["sadd"]).sadd(
            L, dt_s(F))
        assert el_residual(gauged) == el_residual(L)


def test_operators_differ_on_higher_jets():
    # on a second-order density the first-order EL operator keeps the
    # xdd-gradient contribution that the full operator integrates by parts
    L = parse_scalar("-1/24*norm2(xdd)")
    assert variational_derivative(L, 0) == parse("-1/12*xd4")
    assert el_residual(L) == VZERO  # no x or xd dependence


def test_euler_lagrange_residual_series_and_jet_bound():
    L = series_of_scalar(parse_scalar(
        "1/2*norm2(xd) - U(0) - 1/24*pow(h, 2)*norm2(xdd)"
        " - 1/12*pow(h, 2)*dot(x, xdd)"), 2)
    res = euler_lagrange_residual(L)
    assert res.coeffs[0] == parse("-xdd - U(1)")
    # jet bound: E_k depends on at most x^(max(k,1)+1)
    for k, c in enumerate(res.coeffs):
        assert max_jet_vec(c) <= max(k, 1) + 1


def test_jet_order():
    assert jet_order(parse_scalar("dot(xd, U(2; xdd))")) == 2
    assert jet_order(parse_scalar("U(0)")) == 0
