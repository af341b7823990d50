"""Replicator dynamic, rest points and their linear stability.

Trajectories are integrated in log coordinates ``y = log x`` restricted to the
populated regions, which keeps the state strictly inside its face of the
simplex.  Once the flow has nearly stopped, the rest point is polished with a
Gauss-Newton solve of the restricted equilibrium conditions and classified
with a finite-difference Jacobian.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import RK45
from scipy.linalg import null_space
from scipy.special import logsumexp

from .models import ModelInstance, SolverError, payoff_and_wages

SUPPORT_THRESHOLD = 1e-8
SPREAD_RTOL = 1e-8
VERDICT_TOL = 1e-8
JAC_STEP = 1e-5
NEWTON_STEP = 1e-7
TAIL_STEPS = 50


def replicator_rhs(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Replicator velocity ``x_i (v_i - x.v)``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return x * (v - x @ v)


class PayoffOracle:
    """Payoff evaluator that warm-starts each wage solve from the last one."""

    def __init__(self, m: ModelInstance):
        self.m = m
        self.w: Optional[np.ndarray] = None
        self.calls = 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        self.calls += 1
        try:
            v, w = payoff_and_wages(self.m, x, self.w)
        except SolverError:
            v, w = payoff_and_wages(self.m, x, None)
        self.w = w
        return v


@dataclass(frozen=True)
class IntegrateOptions:
    """Settings for :func:`integrate_to_rest`.

    Time is measured in units of ``1/|vbar(x0)|`` and velocities likewise, so
    tolerances are relative to the payoff level.
    """

    t_max: float = 1e6
    rtol: float = 1e-8
    atol: float = 1e-10
    velocity_tol: float = 1e-10
    polish: bool = True
    polish_velocity: float = 1e-6
    snap_threshold: float = 1e-6
    check_stability: bool = True
    record: bool = False
    max_steps: int = 100_000


@dataclass(frozen=True)
class RestPoint:
    x: np.ndarray
    v: np.ndarray
    v_star: float
    payoff_spread: float
    velocity: float
    jacobian_eigs: np.ndarray = field(default_factory=lambda: np.empty(0))
    verdict: str = "unknown"
    converged: bool = True
    t: float = 0.0
    steps: int = 0
    trajectory: Optional[tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)
    direction: Optional[np.ndarray] = field(default=None, repr=False)
    note: str = ""

    @property
    def support(self) -> np.ndarray:
        return np.nonzero(self.x > SUPPORT_THRESHOLD)[0]

    @property
    def stable(self) -> bool:
        return self.verdict == "stable"

    def is_spatial_equilibrium(self, rtol: float = SPREAD_RTOL) -> bool:
        return equilibrium_defects(self.x, self.v) <= rtol * max(abs(self.v_star), 1.0)


def equilibrium_defects(x: np.ndarray, v: np.ndarray) -> float:
    """Largest violation of the spatial-equilibrium conditions.

    Populated regions must share the top payoff and empty regions must not
    offer more.
    """
    pop = x > SUPPORT_THRESHOLD
    v_star = float(np.max(v[pop]))
    spread = v_star - float(np.min(v[pop]))
    excess = float(np.max(v[~pop] - v_star, initial=0.0))
    return max(spread, excess)


def _softmax(y: np.ndarray) -> np.ndarray:
    return np.exp(y - logsumexp(y))


def _embed(n: int, idx: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.zeros(n)
    x[idx] = _softmax(y)
    return x


def _restricted_residual(pay, n, idx, y):
    x = _embed(n, idx, y)
    v = pay(x)
    return v[idx] - x @ v, x, v


def polish(
    m: ModelInstance,
    x: np.ndarray,
    support: Optional[np.ndarray] = None,
    pay: Optional[Callable] = None,
    tol: float = 1e-13,
    maxiter: int = 30,
):
    """Gauss-Newton solve of ``v_i = v*`` on the support, in log coordinates.

    Returns ``(x, v, ok)``.
    """
    pay = pay or PayoffOracle(m)
    n = m.n
    idx = np.nonzero(x > 0)[0] if support is None else np.asarray(support)
    y = np.log(x[idx])
    r, xx, v = _restricted_residual(pay, n, idx, y)
    scale = max(abs(float(xx @ v)), 1e-300)
    res = np.max(np.abs(r)) / scale
    if len(idx) == 1:
        return xx, v, True
    for _ in range(maxiter):
        if res < tol:
            return xx, v, True
        J = np.empty((len(idx), len(idx)))
        for j in range(len(idx)):
            yj = y.copy()
            yj[j] += NEWTON_STEP
            J[:, j] = (_restricted_residual(pay, n, idx, yj)[0] - r) / NEWTON_STEP
        A = np.vstack([J, np.ones(len(idx))])
        step = np.linalg.lstsq(A, np.append(-r, 0.0), rcond=None)[0]
        t = 1.0
        while t > 1e-4:
            try:
                r_new, x_new, v_new = _restricted_residual(pay, n, idx, y + t * step)
                res_new = np.max(np.abs(r_new)) / scale
            except (SolverError, FloatingPointError):
                res_new = np.inf
            if np.isfinite(res_new) and res_new < res:
                break
            t *= 0.5
        else:
            return xx, v, res < 1e-11
        y, r, xx, v, res = y + t * step, r_new, x_new, v_new, res_new
    return xx, v, res < 1e-11


def jacobian_eigs(
    m: ModelInstance, x: np.ndarray, pay: Optional[Callable] = None, h: float = JAC_STEP
):
    """Eigenvalues of the replicator linearization at a rest point.

    The tangent block is differenced in log coordinates along directions
    with ``sum_i x_i dy_i = 0``; the eigenvalues match those of the field in
    ``x`` coordinates because the change of variables is a local
    diffeomorphism at the rest point.  Empty regions contribute the exact
    transversal eigenvalues ``v_i - x.v``.

    Returns ``(eigenvalues, direction)`` where ``direction`` is the zero-sum
    ``x``-space vector of the eigenvalue with the largest real part.
    """
    pay = pay or PayoffOracle(m)
    n = m.n
    idx = np.nonzero(x > 0)[0]
    empty = np.nonzero(x <= 0)[0]
    v = pay(x)
    vbar = float(x @ v)
    eigs: list[complex] = []
    best_val, best_dir = -np.inf, None
    if len(idx) > 1:
        xs = x[idx]
        Q = null_space(xs[None, :])
        y = np.log(xs)
        K = np.empty((Q.shape[1], Q.shape[1]))
        for j in range(Q.shape[1]):
            rp = _restricted_residual(pay, n, idx, y + h * Q[:, j])[0]
            rm = _restricted_residual(pay, n, idx, y - h * Q[:, j])[0]
            K[:, j] = Q.T @ ((rp - rm) / (2.0 * h))
        if not np.all(np.isfinite(K)):
            return np.full(len(idx) - 1 + len(empty), np.nan, dtype=complex), None
        lam, U = np.linalg.eig(K)
        eigs.extend(lam)
        i = int(np.argmax(lam.real))
        best_val = lam[i].real
        d = np.zeros(n)
        d[idx] = xs * (Q @ U[:, i].real)
        best_dir = d
    for i in empty:
        val = v[i] - vbar
        eigs.append(val)
        if val > best_val:
            best_val = val
            best_dir = np.zeros(n)
            best_dir[i] = 1.0
            best_dir[idx] -= x[idx]
    if best_dir is not None and np.linalg.norm(best_dir) > 0:
        best_dir = best_dir / np.linalg.norm(best_dir)
    return np.array(eigs, dtype=complex), best_dir


def verdict_of(eigs: np.ndarray, tol: float = VERDICT_TOL) -> str:
    if len(eigs) == 0:
        return "stable"
    top = float(np.max(np.real(eigs)))
    if top < -tol:
        return "stable"
    if top > tol:
        return "unstable"
    return "marginal"


def jacobian_stability(
    m: ModelInstance, x: np.ndarray, pay: Optional[Callable] = None, **extra
) -> RestPoint:
    pay = pay or PayoffOracle(m)
    x = np.asarray(x, dtype=float)
    v = pay(x)
    eigs, direction = jacobian_eigs(m, x, pay)
    if "note" not in extra and not np.all(np.isfinite(eigs)):
        extra["note"] = "ill-conditioned Jacobian: non-finite eigenvalues"
    pop = x > SUPPORT_THRESHOLD
    v_star = float(np.max(v[pop]))
    vel = np.max(np.abs(replicator_rhs(x, v))) / max(abs(float(x @ v)), 1e-300)
    return RestPoint(
        x=x,
        v=v,
        v_star=v_star,
        payoff_spread=float(v_star - np.min(v[pop])),
        velocity=float(vel),
        jacobian_eigs=eigs,
        verdict=verdict_of(eigs),
        direction=direction,
        **extra,
    )


def project_simplex(x0: np.ndarray) -> np.ndarray:
    x = np.clip(np.asarray(x0, dtype=float), 0.0, None)
    s = x.sum()
    if s <= 0:
        raise ValueError("initial state has no mass")
    return x / s


def _try_polish(m, x, v, pay, opts):
    vbar = float(x @ v)
    tol = 1e-6 * abs(vbar)
    leaving = (x < opts.snap_threshold) & (v < vbar - tol)
    xs = np.where(leaving, 0.0, x)
    xs = xs / xs.sum()
    xp, vp, ok = polish(m, xs, pay=pay)
    if not ok or equilibrium_defects(xp, vp) > SPREAD_RTOL * max(abs(float(xp @ vp)), 1.0):
        return None
    return xp


def _tail_note(tail, velocity: float, t: float, steps: int) -> str:
    """Summary of the last steps of a run that did not come to rest."""
    if len(tail) < 2:
        return f"not at rest after {steps} steps (t={t:.3g}); relative velocity {velocity:.2e}"
    X = np.array(tail)
    wander = float(np.max(X.max(axis=0) - X.min(axis=0)))
    drift = float(np.max(np.abs(X[-1] - X[0])))
    kind = "oscillating" if wander > 2.0 * drift else "drifting"
    return (
        f"not at rest after {steps} steps (t={t:.3g}); relative velocity {velocity:.2e}; "
        f"last {len(X)} steps {kind}: range {wander:.2e}, net drift {drift:.2e}"
    )


def integrate_to_rest(
    m: ModelInstance, x0: np.ndarray, opts: Optional[IntegrateOptions] = None
) -> RestPoint:
    """Follow the replicator dynamic from ``x0`` until it comes to rest."""
    opts = opts or IntegrateOptions()
    pay = PayoffOracle(m)
    n = m.n
    x = project_simplex(x0)
    v = pay(x)
    s = 1.0 / max(abs(float(x @ v)), 1e-300)
    t, steps = 0.0, 0
    traj_t: list[float] = [0.0]
    traj_x: list[np.ndarray] = [x.copy()]
    tail: deque = deque(maxlen=TAIL_STEPS)
    next_polish_t = 0.0
    polished = None
    converged = False

    def rel_velocity(x, v):
        return float(np.max(np.abs(replicator_rhs(x, v)))) * s

    while steps < opts.max_steps and t < opts.t_max:
        idx = np.nonzero(x > 0)[0]
        if len(idx) == 1:
            converged = True
            break

        def f(_t, y, idx=idx):
            xx = _embed(n, idx, y)
            vv = pay(xx)
            return s * (vv[idx] - xx @ vv)

        solver = RK45(f, t, np.log(x[idx]), opts.t_max, rtol=opts.rtol, atol=opts.atol)
        restart = False
        while solver.status == "running" and steps < opts.max_steps:
            solver.step()
            steps += 1
            t = solver.t
            y = solver.y
            x = _embed(n, idx, y)
            tail.append(x)
            if opts.record:
                traj_t.append(t)
                traj_x.append(x.copy())
            vel = float(np.max(np.abs(x[idx] * solver.f)))
            if vel < opts.velocity_tol:
                converged = True
                break
            if opts.polish and vel < opts.polish_velocity and t >= next_polish_t:
                v = pay(x)
                polished = _try_polish(m, x, v, pay, opts)
                if polished is not None and opts.check_stability:
                    eigs, _ = jacobian_eigs(m, polished, pay)
                    if verdict_of(eigs) == "unstable":
                        polished = None
                if polished is not None:
                    x = polished
                    converged = True
                    break
                next_polish_t = max(2.0 * t, t + 10.0)
            if np.min(y - logsumexp(y)) < -700.0:
                # numerically extinct: drop to the face and restart
                x[x < np.exp(-700.0)] = 0.0
                x = x / x.sum()
                restart = True
                break
        if converged or not restart:
            break
    if converged and polished is None and opts.polish:
        v = pay(x)
        p = _try_polish(m, x, v, pay, opts)
        if p is not None:
            x = p
    v = pay(x)
    if not converged:
        converged = rel_velocity(x, v) < opts.velocity_tol
    extra = dict(converged=converged, t=t, steps=steps)
    if not converged:
        extra["note"] = _tail_note(tail, rel_velocity(x, v), t, steps)
    if opts.record:
        extra["trajectory"] = (np.array(traj_t), np.array(traj_x))
    if opts.check_stability:
        return jacobian_stability(m, x, pay, **extra)
    pop = x > SUPPORT_THRESHOLD
    v_star = float(np.max(v[pop]))
    return RestPoint(
        x=x,
        v=v,
        v_star=v_star,
        payoff_spread=float(v_star - np.min(v[pop])),
        velocity=rel_velocity(x, v),
        **extra,
    )
