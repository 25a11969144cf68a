"""Floating-point laboratory.

Runs variational integrators (two-step discrete Euler-Lagrange recursions),
integrates truncated modified equations with a high-order reference solver,
and performs the defect-order and mesh-point comparison studies.  All
routines are deterministic; there is no randomness in the lab.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .catalog import XM, XC, XP, DifferenceEquation
from .expr import Jet, eval_v, jet_name
from .modeq import DerivativeClosure, ModifiedEquation
from .series import HSeries


@dataclass
class Trajectory:
    times: np.ndarray           # strictly increasing sample times
    states: np.ndarray          # (n_samples, dim)
    velocities: np.ndarray | None
    source: str
    h: float
    dense: object = field(default=None, repr=False)  # scipy dense output

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class OrderStudy:
    hs: tuple
    defects: tuple
    slope: float
    expected: float


def _as_state(x, dim: int) -> np.ndarray:
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.shape != (dim,):
        raise ValueError(f"state has shape {a.shape}, expected ({dim},)")
    return a


def psi_evaluator(De: DifferenceEquation, env_extra: dict | None = None):
    """Numeric Psi(xm, xc, xp, h) from the symbolic residual."""
    extra = dict(env_extra or {})

    def psi(xm, xc, xp, h):
        env = {"xm": xm, "xc": xc, "xp": xp, "h": float(h)}
        env.update(extra)
        return eval_v(De.psi, env)

    return psi


def run_discrete(De: DifferenceEquation, x0, x1, h: float, n_steps: int,
                 env_extra: dict | None = None, newton_tol: float = 1e-12,
                 max_iter: int = 50) -> Trajectory:
    """Iterate Psi(x_{j-1}, x_j, x_{j+1}, h) = 0 by damped Newton in x_{j+1}.

    The predictor is x_{j+1} ~ 2 x_j - x_{j-1}; the Jacobian is formed by
    forward differences (state dimensions here are tiny).
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    x1 = _as_state(x1, x0.shape[0])
    dim = x0.shape[0]
    psi = psi_evaluator(De, env_extra)
    xs = [x0, x1]
    scale = max(1.0, 1.0 / h ** 2)
    for _ in range(n_steps - 1):
        xm, xc = xs[-2], xs[-1]
        xp = 2 * xc - xm
        converged = False
        for _ in range(max_iter):
            r = psi(xm, xc, xp, h)
            if np.max(np.abs(r)) < newton_tol * scale:
                converged = True
                break
            J = np.empty((dim, dim))
            eps = 1e-7 * max(1.0, np.max(np.abs(xp)))
            for i in range(dim):
                e = np.zeros(dim)
                e[i] = eps
                J[:, i] = (psi(xm, xc, xp + e, h) - r) / eps
            step = np.linalg.solve(J, -r)
            lam = 1.0
            base = np.max(np.abs(r))
            while lam > 1e-4:
                cand = xp + lam * step
                if np.max(np.abs(psi(xm, xc, cand, h))) < base:
                    xp = cand
                    break
                lam *= 0.5
            else:
                xp = xp + step
        if not converged:
            raise RuntimeError(
                f"Newton did not reach |Psi| < {newton_tol * scale:g} "
                f"in {max_iter} iterations")
        xs.append(xp)
    times = h * np.arange(len(xs))
    return Trajectory(times, np.array(xs), None, "discrete", h)


def modeq_rhs(modeq: ModifiedEquation, k: int, h_param: float,
              env_extra: dict | None = None):
    """Numeric (x, v) -> xdd for the k-truncated modified equation."""
    if k > modeq.order:
        raise ValueError("truncation order exceeds the derived series")
    extra = dict(env_extra or {})
    coeffs = modeq.coeffs[:k + 1]
    weights = [h_param ** j for j in range(k + 1)]

    def rhs(x, v):
        env = {"x": x, "xd": v, "h": float(h_param)}
        env.update(extra)
        out = None
        for w, c in zip(weights, coeffs):
            if not c.items:
                continue
            part = w * eval_v(c, env)
            out = part if out is None else out + part
        return out

    return rhs


def integrate_modeq(modeq: ModifiedEquation, k: int, x0, v0, h_param: float,
                    T: float, tol: float = 1e-12,
                    env_extra: dict | None = None,
                    sample_dt: float | None = None) -> Trajectory:
    """Reference solution of xdd = T_k(f(x, xd, h_param)) on [0, T].

    Uses an embedded high-order explicit Runge-Kutta method (DOP853) with
    dense output; `h_param` enters only as a parameter of the vector field.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    v0 = _as_state(v0, x0.shape[0])
    dim = x0.shape[0]
    f = modeq_rhs(modeq, k, h_param, env_extra)

    def rhs(t, y):
        return np.concatenate([y[dim:], f(y[:dim], y[dim:])])

    sol = solve_ivp(rhs, (0.0, T), np.concatenate([x0, v0]), method="DOP853",
                    rtol=tol, atol=tol, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"reference integration failed: {sol.message}")
    dt = h_param if sample_dt is None else sample_dt
    times = np.arange(0.0, T + 0.5 * dt, dt)
    times = times[times <= T + 1e-12]
    ys = sol.sol(times)
    return Trajectory(times, ys[:dim].T.copy(), ys[dim:].T.copy(),
                      f"modeq_k{k}", h_param, dense=sol.sol)


def defect_order_study(De: DifferenceEquation, modeq: ModifiedEquation,
                       k: int, h_ladder, window: float, x0, v0,
                       tol: float = 1e-13, env_extra: dict | None = None,
                       expected: float | None = None,
                       samples_per_interval: int = 20) -> OrderStudy:
    """Sup-norm of Psi along solutions of the truncated modified equation.

    For each h in the ladder, integrates the k-truncated modified equation
    on [0, window], samples Psi(x(t-h), x(t), x(t+h), h) densely, and fits
    the log-log slope of the sup defect against h.
    """
    if len(h_ladder) < 4:
        raise ValueError("order study needs at least 4 ladder points")
    psi = psi_evaluator(De, env_extra)
    dim = np.atleast_1d(np.asarray(x0, dtype=float)).shape[0]
    defects = []
    for h in h_ladder:
        traj = integrate_modeq(modeq, k, x0, v0, h, window, tol, env_extra)
        n = max(2, int(round((window - 2 * h) / h)) * samples_per_interval)
        ts = np.linspace(h, window - h, n)
        sup = 0.0
        for t in ts:
            xm = traj.dense(t - h)[:dim]
            xc = traj.dense(t)[:dim]
            xp = traj.dense(t + h)[:dim]
            sup = max(sup, float(np.max(np.abs(psi(xm, xc, xp, h)))))
        defects.append(sup)
    slope = float(np.polyfit(np.log(h_ladder), np.log(defects), 1)[0])
    if expected is None:
        expected = float(k + 1)
    return OrderStudy(tuple(float(h) for h in h_ladder), tuple(defects),
                      slope, expected)


def meshpoint_comparison(discrete: Trajectory, continuous: Trajectory) -> dict:
    """Per-mesh-point deviation between two trajectories on a shared mesh."""
    n = min(len(discrete.times), len(continuous.times))
    if not np.allclose(discrete.times[:n], continuous.times[:n],
                       rtol=0, atol=1e-9):
        raise ValueError("trajectories do not share a mesh")
    dev = np.max(np.abs(discrete.states[:n] - continuous.states[:n]), axis=1)
    return {
        "times": discrete.times[:n],
        "deviation": dev,
        "sup": float(np.max(dev)),
    }


def closure_evaluators(closure: DerivativeClosure, k: int, h_param: float,
                       env_extra: dict | None = None) -> dict:
    """Numeric (x, v) -> x^(j) along the modified equation, j >= slot."""
    extra = dict(env_extra or {})
    out = {}
    for j, series in closure.series.items():
        coeffs = series.coeffs[:k + 1]

        def make(coeffs=coeffs):
            def ev(x, v):
                env = {"x": x, "xd": v, "h": float(h_param)}
                env.update(extra)
                acc = None
                for m, c in enumerate(coeffs):
                    if not c.items:
                        continue
                    part = h_param ** m * eval_v(c, env)
                    acc = part if acc is None else acc + part
                return acc
            return ev

        out[j] = make()
    return out


def interior_condition_study(mesh: HSeries, modeq: ModifiedEquation,
                             closure: DerivativeClosure, k: int, ell: int,
                             h_ladder, window: float, x0, v0,
                             tol: float = 1e-13,
                             env_extra: dict | None = None) -> OrderStudy:
    """Numerical scaling of dL_mesh/dx^(ell) along modified-equation
    solutions; the expected slope is k + ell + 1 (natural interior
    conditions vanish to that order).

    The gradient must keep mesh terms up to order k + ell: the terms of
    order between k and k + ell are exactly the ones that cancel the
    leading contributions of the lower-order terms, so truncating at k
    would spoil the scaling.
    """
    from .expr import grad_s

    if ell < 2:
        raise ValueError("interior conditions concern jets of order >= 2")
    if mesh.order < k + ell:
        raise ValueError(
            f"mesh series of order {mesh.order} is too short: the study "
            f"needs terms up to order k + ell = {k + ell}")
    grads = [grad_s(c, Jet(ell)) for c in mesh.coeffs[:k + ell + 1]]
    extra = dict(env_extra or {})
    dim = np.atleast_1d(np.asarray(x0, dtype=float)).shape[0]
    sups = []
    for h in h_ladder:
        traj = integrate_modeq(modeq, k, x0, v0, h, window, tol, env_extra)
        closures = closure_evaluators(closure, k, h, env_extra)
        ts = np.linspace(0.0, window, 60)
        sup = 0.0
        for t in ts:
            y = traj.dense(t)
            x, v = y[:dim], y[dim:]
            env = {"x": x, "xd": v, "h": float(h)}
            env.update(extra)
            for j, ev in closures.items():
                env[jet_name(j)] = ev(x, v)
            val = None
            for m, g in enumerate(grads):
                if not g.items:
                    continue
                part = h ** m * eval_v(g, env)
                val = part if val is None else val + part
            if val is not None:
                sup = max(sup, float(np.max(np.abs(val))))
        sups.append(sup)
    slope = float(np.polyfit(np.log(h_ladder), np.log(sups), 1)[0])
    return OrderStudy(tuple(float(h) for h in h_ladder), tuple(sups),
                      slope, float(k + ell + 1))


# ---------------------------------------------------------------------------
# diagnostics

def energy_series(traj: Trajectory, potential) -> np.ndarray:
    """E = |v|^2/2 + U(x) along a trajectory with velocities."""
    if traj.velocities is None:
        v = np.gradient(traj.states, traj.times, axis=0)
    else:
        v = traj.velocities
    return 0.5 * np.sum(v ** 2, axis=1) + np.array(
        [potential(x) for x in traj.states])


def angular_momentum_series(traj: Trajectory) -> np.ndarray:
    """Planar angular momentum x ^ v (2-D states only)."""
    if traj.states.shape[1] != 2:
        raise ValueError("angular momentum diagnostic is planar")
    if traj.velocities is None:
        v = np.gradient(traj.states, traj.times, axis=0)
    else:
        v = traj.velocities
    return traj.states[:, 0] * v[:, 1] - traj.states[:, 1] * v[:, 0]


def perihelion_angles(traj: Trajectory) -> list:
    """(time, angle) at local minima of |x|, refined by a parabola fit.

    Angles are unwrapped so that consecutive perihelia report cumulative
    rotation; the mean increment is the precession per orbit.
    """
    r = np.linalg.norm(traj.states, axis=1)
    t = traj.times
    found = []
    for i in range(1, len(r) - 1):
        if r[i] <= r[i - 1] and r[i] < r[i + 1]:
            # quadratic refinement of the minimum position
            denom = r[i - 1] - 2 * r[i] + r[i + 1]
            delta = 0.5 * (r[i - 1] - r[i + 1]) / denom if denom != 0 else 0.0
            dt = t[i + 1] - t[i]
            tmin = t[i] + delta * dt
            w = (tmin - t[i]) / dt
            if w >= 0:
                x = (1 - w) * traj.states[i] + w * traj.states[i + 1]
            else:
                x = (1 + w) * traj.states[i] + (-w) * traj.states[i - 1]
            found.append((float(tmin), float(np.arctan2(x[1], x[0]))))
    if not found:
        raise RuntimeError("no perihelion found in the trajectory window")
    times = [f[0] for f in found]
    angles = np.unwrap(np.array([f[1] for f in found]))
    return list(zip(times, angles.tolist()))


def precession_rate(traj: Trajectory) -> float:
    """Mean perihelion advance per unit time (signed)."""
    peri = perihelion_angles(traj)
    if len(peri) < 2:
        raise RuntimeError("need at least two perihelia to measure precession")
    t0, a0 = peri[0]
    t1, a1 = peri[-1]
    return (a1 - a0) / (t1 - t0)


def orbit_orientation(traj: Trajectory) -> int:
    """+1 for counterclockwise motion, -1 for clockwise."""
    am = angular_momentum_series(traj)
    return 1 if float(np.mean(am)) > 0 else -1
