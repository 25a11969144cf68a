"""Numerics laboratory: discrete runs, reference integration, studies,
diagnostics."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import L_HARM, L_KEPLER, pipeline

from modlag.catalog import discrete_EL
from modlag.lab import (
    closure_evaluators,
    defect_order_study,
    energy_series,
    integrate_modeq,
    interior_condition_study,
    meshpoint_comparison,
    modeq_rhs,
    orbit_orientation,
    perihelion_angles,
    precession_rate,
    psi_evaluator,
    run_discrete,
)


@pytest.fixture(scope="module")
def harm6():
    Ld, (Ldisc, mesh, res, modeq, clos) = pipeline(L_HARM, "stormer_verlet", 6)
    return discrete_EL(Ld), mesh, modeq, clos


def test_harmonic_period_six_is_exact(harm6):
    # with h = 1 the SV map for xdd = -x is x_{j+1} = x_j - x_{j-1},
    # periodic with period 6; the residual at the recursion is exactly zero
    De = harm6[0]
    h = 1.0
    traj = run_discrete(De, [1.0], [np.cos(1.0)], h, 12)
    assert np.allclose(traj.states[:6], traj.states[6:12], atol=1e-12)
    psi = psi_evaluator(De)
    r = psi(traj.states[0], traj.states[1], traj.states[2], h)
    assert float(np.max(np.abs(r))) == 0.0


def test_discrete_run_matches_explicit_sv_recursion(harm6):
    # the Newton loop must land on x_{j+1} = 2 x_j - x_{j-1} - h^2 x_j
    De = harm6[0]
    h = 0.3
    traj = run_discrete(De, [1.0], [np.cos(h)], h, 50)
    x = [np.array([1.0]), np.array([np.cos(h)])]
    for _ in range(49):
        x.append(2 * x[-1] - x[-2] - h ** 2 * x[-1])
    assert np.max(np.abs(traj.states - np.array(x))) < 1e-10


def test_meshpoint_deviation_decreases_with_k(harm6):
    De, mesh, modeq, clos = harm6
    h, T = 1.0, 100.0
    disc = run_discrete(De, [1.0], [np.cos(1.0)], h, int(T / h))
    sups = []
    for k in (0, 2, 4):
        ref = integrate_modeq(modeq, k, [1.0], [0.0], h, T, tol=1e-12)
        sups.append(meshpoint_comparison(disc, ref)["sup"])
    assert sups[0] > sups[1] > sups[2]
    assert sups[2] < 0.06


def test_defect_order_study_harmonic(harm6):
    De, mesh, modeq, clos = harm6
    study = defect_order_study(De, modeq, 2, [0.4, 0.2, 0.1, 0.05], 10.0,
                               [1.0], [0.0])
    assert study.expected == 3.0  # default k + 1
    assert 3.8 < study.slope < 4.2  # symmetric method: actually k + 2


def test_order_study_requires_four_points(harm6):
    De, mesh, modeq, clos = harm6
    with pytest.raises(ValueError):
        defect_order_study(De, modeq, 2, [0.2, 0.1], 5.0, [1.0], [0.0])


def test_modeq_rhs_truncation_bound(harm6):
    De, mesh, modeq, clos = harm6
    with pytest.raises(ValueError):
        modeq_rhs(modeq, modeq.order + 1, 0.1)
    f = modeq_rhs(modeq, 4, 0.1)
    x = np.array([0.7])
    expected = -(1 + 0.01 / 12 + 0.0001 / 90) * x
    assert np.max(np.abs(f(x, np.array([0.0])) - expected)) < 1e-15


def test_newton_failure_raises():
    Ld, _ = pipeline(L_KEPLER, "midpoint", 2)
    De = discrete_EL(Ld)
    # a single damped-Newton iteration cannot reach the tolerance
    with pytest.raises(RuntimeError):
        run_discrete(De, [-3.0, 0.0], [-2.99, 0.2], 0.5, 3, max_iter=1)


def test_closure_evaluators_match_rhs(harm6):
    De, mesh, modeq, clos = harm6
    evs = closure_evaluators(clos, 4, 0.2)
    f = modeq_rhs(modeq, 4, 0.2)
    x, v = np.array([0.6]), np.array([-0.1])
    assert np.max(np.abs(evs[2](x, v) - f(x, v))) < 1e-15
    # x^(3) for the harmonic closure is f'(x) xd = -c xd with the same c
    assert np.max(np.abs(evs[3](x, v) - f(v, x))) < 1e-15


def test_interior_condition_scaling():
    # anharmonic potential so the defect is genuinely nonzero; k + ell odd
    # puts the leading term exactly at h^(k+ell+1) (for even k + ell that
    # term cancels and the slope comes out one order higher)
    L = "1/2*norm2(xd) - 1/4*pow(norm2(x), 2) - 1/2*norm2(x)"
    Ld, (_, mesh, _, modeq, clos) = pipeline(L, "stormer_verlet", 6)
    study = interior_condition_study(mesh, modeq, clos, 3, 2,
                                     [0.4, 0.2, 0.1, 0.05], 6.0,
                                     [0.9], [0.1])
    assert study.expected == 6.0
    assert abs(study.slope - 6.0) < 0.3
    # even k + ell: the O(h^(k+ell+1)) bound still holds (slope above it)
    study2 = interior_condition_study(mesh, modeq, clos, 2, 2,
                                      [0.4, 0.2, 0.1, 0.05], 6.0,
                                      [0.9], [0.1])
    assert study2.slope > study2.expected - 0.3


def test_interior_condition_needs_long_mesh_series(harm6):
    De, mesh, modeq, clos = harm6
    with pytest.raises(ValueError):
        interior_condition_study(mesh, modeq, clos, 6, 2,
                                 [0.4, 0.2, 0.1, 0.05], 6.0, [1.0], [0.0])


def test_reference_solver_insensitive_to_tolerance(harm6):
    De, mesh, modeq, clos = harm6
    a = integrate_modeq(modeq, 2, [1.0], [0.0], 0.5, 30.0, tol=1e-10)
    b = integrate_modeq(modeq, 2, [1.0], [0.0], 0.5, 30.0, tol=1e-13)
    assert np.max(np.abs(a.states - b.states)) < 1e-8


def test_energy_and_perihelion_diagnostics():
    # Kepler ellipse: exact flow conserves energy; perihelion extraction
    # recovers a fixed apse line (zero precession) for the exact equation
    Ld, (_, _, _, modeq, _) = pipeline(L_KEPLER, "stormer_verlet", 2)
    x0, v0 = [-3.0, 0.0], [0.0, 0.4]
    traj = integrate_modeq(modeq, 0, x0, v0, 0.5, 300.0, tol=1e-12)
    E = energy_series(traj, lambda x: -1.0 / np.linalg.norm(x))
    assert np.max(np.abs(E - E[0])) < 1e-9
    assert orbit_orientation(traj) == -1  # v0 makes the motion clockwise
    peri = perihelion_angles(traj)
    assert len(peri) >= 3
    assert abs(precession_rate(traj)) < 1e-4
    # the truncated modified equation precesses measurably
    traj2 = integrate_modeq(modeq, 2, x0, v0, 0.5, 300.0, tol=1e-12)
    assert abs(precession_rate(traj2)) > 1e-3
