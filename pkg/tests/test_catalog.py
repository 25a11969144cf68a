"""Discretization catalog: consistency, expansions, discrete EL, Legendre."""

from __future__ import annotations

import pytest

from conftest import L_MECH

from modlag.catalog import (
    METHODS,
    XC,
    XM,
    XNEXT,
    XP,
    XPREV,
    build_discrete_lagrangian,
    discrete_EL,
    discrete_legendre,
    expand_discrete_lagrangian,
    expand_psi,
)
from modlag.expr import Jet, Q, VSym, max_jet, ssym, subst_v, vatom, vscale, vsub
from modlag.grammar import parse, parse_scalar, print_expr


@pytest.mark.parametrize("method", METHODS)
def test_catalog_methods_are_consistent(method):
    L = parse_scalar(L_MECH)
    Ld = build_discrete_lagrangian(method, L)
    series = expand_discrete_lagrangian(Ld, 0)
    assert series.coeffs[0] == L


def test_inconsistent_custom_rejected():
    L = parse_scalar(L_MECH)
    bad = parse_scalar("norm2(xnext - xprev)", vectors=("xprev", "xnext")) \
        if False else parse("pow(h, -2)*norm2(xnext - xprev)",
                            vector_names=("xprev", "xnext"))
    with pytest.raises(ValueError):
        build_discrete_lagrangian("custom", L, expr=bad)
    with pytest.raises(ValueError):
        build_discrete_lagrangian("nonsense", L)
    with pytest.raises(ValueError):
        # higher jets are not allowed in the continuous density
        build_discrete_lagrangian("midpoint", parse_scalar("norm2(xdd)"))


def test_sv_ldisc_second_order_golden():
    Ld = build_discrete_lagrangian("stormer_verlet", parse_scalar(L_MECH))
    series = expand_discrete_lagrangian(Ld, 2)
    assert series.coeffs[0] == parse_scalar(L_MECH)
    assert series.coeffs[1].terms == ()
    golden = parse_scalar(
        "1/24*(dot(xd, xd3) - 3*U(1; x)*0 - 3*dot(U(1), xdd)"
        " - 3*U(2; xd, xd))") if False else parse_scalar(
        "1/24*dot(xd, xd3) - 1/8*dot(U(1), xdd) - 1/8*U(2; xd, xd)")
    assert series.coeffs[2] == golden


def test_jet_order_bound_of_ldisc():
    # h^l coefficient of L_disc([x], h) has jets of order <= l + 1
    Ld = build_discrete_lagrangian("midpoint", parse_scalar(L_MECH))
    series = expand_discrete_lagrangian(Ld, 4)
    for ell, c in enumerate(series.coeffs):
        assert max_jet(c) <= ell + 1


def test_discrete_el_three_point_residual():
    Ld = build_discrete_lagrangian("stormer_verlet", parse_scalar(L_MECH))
    De = discrete_EL(Ld)
    # Psi = -(xp - 2 xc + xm)/h^2 - U'(xc)
    expected = parse(
        "-pow(h, -2)*xp + 2*pow(h, -2)*xc - pow(h, -2)*xm - U(1; ; xc)",
        vector_names=("xm", "xc", "xp"))
    assert De.psi == expected
    assert De.target == parse("-xdd - U(1)")


def test_expand_psi_matches_el_target_at_order_zero():
    for method in METHODS:
        Ld = build_discrete_lagrangian(method, parse_scalar(L_MECH))
        De = discrete_EL(Ld)
        series = expand_psi(De, 0)
        assert series.coeffs[0] == De.target


def test_discrete_legendre_symplectic_euler_update():
    # For sympl_euler_A the generating-function momenta reproduce
    # p_next = p_prev - h U'(xprev) and xnext = xprev + h p_next.
    Ld = build_discrete_lagrangian("sympl_euler_A", parse_scalar(L_MECH))
    leg = discrete_legendre(Ld)
    h = ssym("h")
    diff = vsub(leg.p_next, leg.p_prev)
    assert diff == parse("-h*U(1; ; xprev)", vector_names=("xprev", "xnext"))
    # p_next = (xnext - xprev)/h
    assert leg.p_next == parse("pow(h, -1)*xnext - pow(h, -1)*xprev",
                               vector_names=("xprev", "xnext"))


def test_psi_is_gradient_sum():
    # Psi must equal D2 Ld(xm, xc) + D1 Ld(xc, xp) exactly (no rescaling)
    Ld = build_discrete_lagrangian("midpoint", parse_scalar(L_MECH))
    from modlag.expr import grad_s
    d1 = grad_s(Ld.expr, XPREV)
    d2 = grad_s(Ld.expr, XNEXT)
    psi = discrete_EL(Ld).psi
    manual = subst_v(d2, {XPREV: vatom(XM), XNEXT: vatom(XC)})
    manual = __import__("modlag.expr", fromlist=["vadd"]).vadd(
        manual, subst_v(d1, {XPREV: vatom(XC), XNEXT: vatom(XP)}))
    assert psi == manual
