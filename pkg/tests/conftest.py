"""Shared fixtures: cached symbolic pipelines and random-expression helpers."""

from __future__ import annotations

import random
from functools import lru_cache

import numpy as np
import pytest

from modlag.catalog import build_discrete_lagrangian, discrete_EL
from modlag.expr import (
    Jet,
    Q,
    sadd,
    sdot,
    smul,
    snum,
    spow,
    sscale,
    ssym,
    uapp,
    vadd,
    vatom,
    vscale,
)
from modlag.grammar import parse_scalar
from modlag.modeq import mesh_route


@lru_cache(maxsize=None)
def pipeline(preset_L: str, method: str, k: int):
    """(Ldisc, mesh, residual, modeq, closure) for a Lagrangian text."""
    Ld = build_discrete_lagrangian(method, parse_scalar(preset_L))
    return Ld, mesh_route(Ld, k)


L_MECH = "1/2*norm2(xd) - U(0)"
L_HARM = "1/2*norm2(xd) - 1/2*norm2(x)"
L_KEPLER = "1/2*norm2(xd) + pow(norm2(x), -1/2)"


@pytest.fixture(scope="session")
def sv_mech():
    """Stormer-Verlet mechanical pipeline through order 5."""
    return pipeline(L_MECH, "stormer_verlet", 5)


@pytest.fixture(scope="session")
def sv_harmonic():
    return pipeline(L_HARM, "stormer_verlet", 6)


@pytest.fixture(scope="session")
def sv_kepler():
    return pipeline(L_KEPLER, "stormer_verlet", 2)


@pytest.fixture(scope="session")
def sea_mech():
    return pipeline(L_MECH, "sympl_euler_A", 2)


# ---------------------------------------------------------------------------
# acceptance-criteria summary (one pass/fail line per criterion)

ACCEPTANCE = {
    1: "Störmer–Verlet mechanical modified equation matches the "
       "exact-rational goldens at orders 2 and 4 (corrected order-4 display)",
    2: "modified Lagrangians/Hamiltonian match the exact goldens "
       "(mechanical k=3/5, Kepler k=3, symplectic-Euler k=2)",
    3: "harmonic-oscillator coefficients -x, -x/12, -x/90, -x/560 match the "
       "independent arcsin-series oracle",
    4: "EL(L_mod,k) reproduces the modified equation for every "
       "method × preset at k in {2, 3, 4}",
    5: "Euler–Maclaurin coefficients match the Bernoulli-recurrence oracle; "
       "midpoint-sum corrections show orders >= 3.8 and >= 5.8",
    6: "defect-order ladders: harmonic slope in [3.8, 4.2], "
       "Kepler slope in [3.5, 4.3]",
    7: "harmonic h=1 discrete orbit has exact period 6; mesh-point "
       "deviation decreases with truncation order",
    8: "Kepler h=0.5: clockwise orbit with counterclockwise precession; "
       "k=2 modified equation agrees in sign, slower, within 25%",
    9: "anisotropic oscillator first-order modified equation matches the "
       "opaque-matrix golden including the skew coupling term",
    10: "randomized property suites: normalization/truncation idempotence, "
        "finite-difference agreement, null-Lagrangian annihilation, gauge "
        "invariance, jet-order bounds",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    import re

    verdicts: dict[int, bool] = {}
    for status, reports in terminalreporter.stats.items():
        if status not in ("passed", "failed", "error"):
            continue
        for rep in reports:
            nodeid = getattr(rep, "nodeid", "")
            m = re.search(r"test_acceptance\.py::test_criterion_0*(\d+)",
                          nodeid)
            if not m or getattr(rep, "when", "call") != "call":
                continue
            n = int(m.group(1))
            verdicts[n] = verdicts.get(n, True) and status == "passed"
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n in sorted(verdicts):
            verdict = "PASS" if verdicts[n] else "FAIL"
            terminalreporter.write_line(
                f"ACCEPTANCE {n}: {verdict} — {ACCEPTANCE[n]}")


# ---------------------------------------------------------------------------
# randomized expression corpus (fixed seed)

def random_scalar(rng: random.Random, max_jet: int = 2, depth: int = 3):
    """Random scalar expression over jets, U-tensors, dots, and powers."""
    def vec(d):
        choice = rng.randrange(4 if d > 0 else 2)
        if choice == 0:
            return vatom(Jet(rng.randrange(max_jet + 1)))
        if choice == 1:
            return vscale(snum(Q(rng.randrange(-3, 4) or 1,
                                 rng.randrange(1, 4))),
                          vatom(Jet(rng.randrange(max_jet + 1))))
        if choice == 2:
            order = rng.randrange(1, 4)
            return uapp("U", order, [vec(d - 1) for _ in range(order - 1)])
        return vadd(vec(d - 1), vec(d - 1))

    def scal(d):
        choice = rng.randrange(5 if d > 0 else 2)
        if choice == 0:
            return snum(Q(rng.randrange(-4, 5) or 2, rng.randrange(1, 5)))
        if choice == 1:
            return sdot(vec(max(d - 1, 0)), vec(max(d - 1, 0)))
        if choice == 2:
            return sadd(scal(d - 1), scal(d - 1))
        if choice == 3:
            return smul(scal(d - 1), scal(d - 1))
        return sscale(Q(rng.randrange(1, 4)), uapp("U", 0, []))

    return scal(depth)


def random_density(rng: random.Random, max_jet: int = 1):
    """Random Lagrangian-like density (always includes a kinetic term)."""
    return sadd(parse_scalar("1/2*norm2(xd)"), random_scalar(rng, max_jet, 2))


# ---------------------------------------------------------------------------
# numeric helpers

def num_env(rng: np.random.Generator, dim: int, max_jet: int = 3) -> dict:
    """Random numeric environment for jets x, xd, ..., and h."""
    env = {"h": 0.37}
    names = ["x", "xd", "xdd"] + [f"xd{j}" for j in range(3, max_jet + 1)]
    for name in names[:max_jet + 1]:
        env[name] = rng.uniform(0.3, 1.2, size=dim)
    return env
