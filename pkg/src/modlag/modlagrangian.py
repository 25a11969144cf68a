"""Classical modified Lagrangians and modified Hamiltonians.

The classical modified Lagrangian L_mod,k is obtained from the meshed
modified Lagrangian by substituting the derivative closure of the modified
equation (x^(j) -> F^j) and truncating at order k.  Its Euler-Lagrange
equation, solved for xdd and truncated at k, reproduces the truncated
modified equation.

The modified Hamiltonian is the series Legendre transform of L_mod,k:
p = dL/dxd is reverted order by order to xd = V(x, p, h) and
H = <p, xd> - L evaluated along the reversion.  The reverse transform is
implemented symmetrically, which makes the Lagrangian/Hamiltonian
round-trip an executable check.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expr import (
    Jet,
    VSym,
    Vec,
    VZERO,
    contains_vatom,
    grad_s,
    max_jet,
    max_jet_vec,
    vatom,
)
from .jets import el_residual, euler_lagrange_residual
from .modeq import (
    DerivativeClosure,
    ModifiedEquation,
    build_closure,
    eliminate,
    linear_solver,
)
from .series import (
    HSeries,
    compose_series,
    hadd,
    hdot,
    hsub,
    truncate,
    vzero_series,
)

P_MOM = VSym("p")


@dataclass(frozen=True)
class ModifiedLagrangian:
    """L_mod,k: first-order density, coefficients in (x, xd) only."""
    order: int
    series: HSeries

    @property
    def coeffs(self):
        return self.series.coeffs


@dataclass(frozen=True)
class ModifiedHamiltonian:
    """H_mod,k: coefficients in (x, p) only."""
    order: int
    series: HSeries

    @property
    def coeffs(self):
        return self.series.coeffs


def classical_modified_lagrangian(mesh: HSeries, closure: DerivativeClosure,
                                  k: int) -> ModifiedLagrangian:
    """L_mod,k = T_k(L_mesh with x^(j) -> F^j)."""
    if closure.order < max(k - 2, 0):
        raise ValueError(
            f"closure order {closure.order} insufficient for k={k} "
            f"(need {max(k - 2, 0)})")
    if mesh.order < k:
        raise ValueError("mesh series shorter than requested order")
    mesh = truncate(mesh, k)
    top = max(max_jet(c) for c in mesh.coeffs)
    slot = closure.slot
    sub = closure.subs()
    if top > max(closure.series):
        sub = build_closure(closure.series[slot], slot, top).subs()
    out = compose_series(mesh, sub, k)
    for ell, c in enumerate(out.coeffs):
        if max_jet(c) > 1:
            raise ValueError(
                f"modified Lagrangian coefficient {ell} still contains "
                f"higher jets")
    return ModifiedLagrangian(k, out)


def verify_theorem(Lmod: ModifiedLagrangian, modeq: ModifiedEquation) -> dict:
    """EL(L_mod,k) solved for xdd and truncated at k vs T_k(modeq)."""
    k = Lmod.order
    if modeq.order < k:
        raise ValueError("modified equation series shorter than L_mod order")
    residual = euler_lagrange_residual(Lmod.series, check=False)
    F, _ = eliminate(residual, k, slot=2)
    target = truncate(modeq.series, k)
    mismatches = [j for j in range(k + 1)
                  if F.coeffs[j] != target.coeffs[j]]
    return {
        "order": k,
        "equal": not mismatches,
        "mismatch_orders": mismatches,
        "lagrangian_side": F,
        "equation_side": target,
    }


def _revert(R: HSeries, key, k: int, jet_bound: int) -> HSeries:
    """Solve the series equation R(..., u) = 0 for the atom `key`.

    R must be exactly linear in `key` at order 0 (with the usual c*Id or
    invertible-map mass operator); higher orders are handled by the
    standard order-by-order linear solve.
    """
    solve = linear_solver(R.coeffs[0], key, jet_bound)
    U = vzero_series(k)
    for j in range(k + 1):
        defect = compose_series(R, {key: U}, k)
        uj = solve(defect.coeffs[j])
        if max_jet_vec(uj) > jet_bound:
            raise ValueError(
                f"reversion coefficient {j} exceeds jet bound {jet_bound}")
        U = hadd(U, HSeries(k, tuple(
            uj if i == j else VZERO for i in range(k + 1))))
    final = compose_series(R, {key: U}, k)
    for j in range(k + 1):
        if final.coeffs[j] != VZERO:
            raise AssertionError(f"series reversion left a defect at h^{j}")
    return U


def momentum_series(L: HSeries) -> HSeries:
    """p(x, xd, h) = dL/dxd, coefficient-wise."""
    return HSeries(L.order, tuple(grad_s(c, Jet(1)) for c in L.coeffs))


def _const_vseries(atom, k: int) -> HSeries:
    return HSeries(k, (vatom(atom),) + (VZERO,) * k)


def legendre_transform(L: ModifiedLagrangian, k: int) -> ModifiedHamiltonian:
    """H = <p, xd> - L at the series reversion xd = V(x, p, h)."""
    if L.series.order < k:
        raise ValueError("Lagrangian series shorter than requested order")
    Ls = truncate(L.series, k)
    P = momentum_series(Ls)
    pser = _const_vseries(P_MOM, k)
    V = _revert(hsub(P, pser), Jet(1), k, jet_bound=0)
    H = hsub(hdot(pser, V), compose_series(Ls, {Jet(1): V}, k))
    for ell, c in enumerate(H.coeffs):
        if max_jet(c) > 0:
            raise ValueError(
                f"Hamiltonian coefficient {ell} still contains velocities")
    return ModifiedHamiltonian(k, H)


def legendre_inverse(H: ModifiedHamiltonian, k: int) -> ModifiedLagrangian:
    """L = <p, xd> - H at the series reversion p = P(x, xd, h)."""
    if H.series.order < k:
        raise ValueError("Hamiltonian series shorter than requested order")
    Hs = truncate(H.series, k)
    Hp = HSeries(k, tuple(grad_s(c, P_MOM) for c in Hs.coeffs))
    xdser = _const_vseries(Jet(1), k)
    P = _revert(hsub(Hp, xdser), P_MOM, k, jet_bound=1)
    L = hsub(hdot(P, xdser), compose_series(Hs, {P_MOM: P}, k))
    for ell, c in enumerate(L.coeffs):
        if contains_vatom(c, P_MOM):
            raise ValueError(
                f"Lagrangian coefficient {ell} still contains momenta")
    return ModifiedLagrangian(k, L)


def gauge_equivalent(L1: HSeries, L2: HSeries, order: int | None = None) -> bool:
    """True when the densities share Euler-Lagrange residuals order by
    order (they differ by a null Lagrangian)."""
    if order is None:
        order = min(L1.order, L2.order)
    d = hsub(truncate(L1, order), truncate(L2, order))
    for c in d.coeffs:
        if el_residual(c) != VZERO:
            return False
    return True
