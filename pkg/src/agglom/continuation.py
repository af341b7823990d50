"""Sweeps over the freeness parameter tracking stable equilibria.

Each grid point is first corrected from the previous stable state by the
Newton polish of :mod:`agglom.dynamics`.  If the corrected state is unstable
(or the correction fails) the state is nudged along the most unstable
direction and the replicator dynamic is integrated to the next rest point.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import geometry as geo
from .dynamics import (
    SPREAD_RTOL,
    IntegrateOptions,
    PayoffOracle,
    RestPoint,
    equilibrium_defects,
    integrate_to_rest,
    jacobian_stability,
    polish,
)
from .models import ModelInstance, SolverError, gain_function
from .spectral import classify, omega_table

UNIFORM_TOL = 1e-9


def is_uniform(x: np.ndarray, tol: float = UNIFORM_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    return float(x.max() - x.min()) <= tol


def count_peaks(
    x: np.ndarray,
    topology: str = "circle",
    shape: Optional[tuple[int, ...]] = None,
    periodic: bool = True,
    tol: float = UNIFORM_TOL,
) -> int:
    """Number of strict local maxima; a flat run counts once.

    A run of equal values (within ``tol``) is a single peak when every
    neighbour outside the run is lower.  Uniform input returns 0; callers use
    :func:`is_uniform` to tell that case apart.
    """
    x = np.asarray(x, dtype=float)
    if is_uniform(x, tol):
        return 0
    adj = geo.adjacency(topology, shape or (len(x),), periodic)
    seen = np.zeros(len(x), dtype=bool)
    peaks = 0
    for start in range(len(x)):
        if seen[start]:
            continue
        run, queue = {start}, deque([start])
        seen[start] = True
        while queue:
            i = queue.popleft()
            for j in adj[i]:
                if not seen[j] and abs(x[j] - x[start]) <= tol:
                    seen[j] = True
                    run.add(j)
                    queue.append(j)
        # judge the finished plateau against its rim; tolerance chains are not transitive
        top = max(x[i] for i in run)
        rim = {j for i in run for j in adj[i]} - run
        peaks += all(x[j] < top for j in rim)
    return peaks


def peaks_for(m: ModelInstance, x: np.ndarray) -> int:
    d = m.geometry
    return count_peaks(x, d.topology, d.shape, periodic=d.kind != "lattice-bounded")


@dataclass(frozen=True)
class BranchRecord:
    phi: float
    x: np.ndarray
    verdict: str
    peaks: int
    uniform: bool
    branch_id: int
    max_eig: float
    jump: bool = False


@dataclass(frozen=True)
class Event:
    phi: float
    mode_k: Optional[int]
    cls: str
    kind: str

    def as_dict(self) -> dict:
        return {"phi": self.phi, "mode_k": self.mode_k, "class": self.cls, "kind": self.kind}


@dataclass(frozen=True)
class BifurcationDiagram:
    model: str
    direction: str
    cls: str
    records: tuple[BranchRecord, ...]
    events: tuple[Event, ...] = ()

    @property
    def phi(self) -> np.ndarray:
        return np.array([r.phi for r in self.records])

    @property
    def X(self) -> np.ndarray:
        return np.array([r.x for r in self.records])

    @property
    def peaks(self) -> np.ndarray:
        return np.array([r.peaks for r in self.records])

    @property
    def stable(self) -> np.ndarray:
        return np.array([r.verdict != "unstable" for r in self.records])

    def peak_sequence(self, uniform_as: Optional[int] = None) -> list[int]:
        """Distinct consecutive peak counts along the sweep.

        Uniform states are dropped unless ``uniform_as`` gives them a value.
        """
        out: list[int] = []
        for r in self.records:
            p = r.peaks
            if r.uniform:
                if uniform_as is None:
                    continue
                p = uniform_as
            if not out or out[-1] != p:
                out.append(p)
        return out


@dataclass(frozen=True)
class SweepOptions:
    zeta: float = 1e-4
    member: str = "cos"
    max_retries: int = 8
    max_jump: float = 0.02
    substeps: int = 4
    integrate: IntegrateOptions = field(default_factory=IntegrateOptions)


def default_grid(steps: int = 200, lo: float = 0.005, hi: float = 0.995) -> np.ndarray:
    return np.geomspace(lo, hi, steps)


def default_direction(m: ModelInstance) -> str:
    return "down" if classify(gain_function(m)).cls == "II" else "up"


def _seed_direction(m: ModelInstance, rp: RestPoint, member: str) -> tuple[np.ndarray, Optional[int]]:
    """Perturbation pushing the state off an unstable rest point."""
    if m.geometry.is_circulant and is_uniform(rp.x):
        n = m.n
        om = omega_table(gain_function(m), n, [m.geometry.phi])[0]
        k = int(np.argmax(om)) + 1
        if n % 2 == 0 and k == n // 2:
            return geo.mode_vector(n, k, "cos"), k
        return geo.mode_vector(n, k, member), k
    d = rp.direction if rp.direction is not None else np.zeros(m.n)
    return d, None


def _nudge(x: np.ndarray, d: np.ndarray, zeta: float) -> np.ndarray:
    d = d - d.mean() if np.all(x > 0) else d
    y = x + zeta * d
    if np.any(y < 0):
        # keep the push inside the simplex
        neg = d < 0
        scale = np.min(x[neg] / -d[neg]) if np.any(neg) else zeta
        y = x + min(zeta, 0.5 * scale) * d
    y = np.clip(y, 0.0, None)
    return y / y.sum()


def _restart_state(m: ModelInstance, opts: SweepOptions) -> np.ndarray:
    n = m.n
    if m.geometry.is_circulant:
        om = omega_table(gain_function(m), n, [m.geometry.phi])[0]
        d = geo.mode_vector(n, int(np.argmax(om)) + 1, "cos")
    else:
        d = np.cos(np.pi * np.arange(n) / n)
    return _nudge(np.full(n, 1.0 / n), d - d.mean(), opts.zeta)


def _correct(m: ModelInstance, x: np.ndarray, opts: SweepOptions) -> tuple[RestPoint, bool]:
    """Next point on the branch; the flag is False when the flow had to take over."""
    pay = PayoffOracle(m)
    try:
        xp, vp, ok = polish(m, x, pay=pay)
    except (SolverError, FloatingPointError, np.linalg.LinAlgError):
        ok = False
    if ok and equilibrium_defects(xp, vp) <= SPREAD_RTOL * max(abs(float(xp @ vp)), 1.0):
        return jacobian_stability(m, xp, pay), True
    start = np.asarray(x, dtype=float).copy()
    if ok:
        # empty regions now offer more: reseed them so the flow can enter
        vstar = float(np.max(vp[xp > 0]))
        start[(xp <= 0) & (vp > vstar)] = opts.zeta
        start /= start.sum()
    return integrate_to_rest(m, start, opts.integrate), False


def _is_jump(m: ModelInstance, x: np.ndarray, phi0: float, phi1: float, step: float, opts: SweepOptions) -> bool:
    """Re-walk a large step in substeps; a smooth branch spreads the motion,
    a fold puts most of it into one substep."""
    y = x
    worst = 0.0
    for phi in np.linspace(phi0, phi1, opts.substeps + 1)[1:]:
        rp, _ = _correct(m.with_phi(float(phi)), y, opts)
        worst = max(worst, float(np.max(np.abs(rp.x - y))))
        y = rp.x
    return worst > 0.5 * step


def sweep(
    m: ModelInstance,
    phi_grid: Optional[Sequence[float]] = None,
    direction: Optional[str] = None,
    x0: Optional[np.ndarray] = None,
    options: Optional[SweepOptions] = None,
) -> BifurcationDiagram:
    opts = options or SweepOptions()
    grid = default_grid() if phi_grid is None else np.asarray(phi_grid, dtype=float)
    diffs = np.diff(grid)
    if len(grid) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("phi grid must be strictly monotone")
    direction = direction or default_direction(m)
    if direction not in ("up", "down"):
        raise ValueError("direction must be 'up' or 'down'")
    grid = np.sort(grid) if direction == "up" else np.sort(grid)[::-1]
    cls = classify(gain_function(m)).cls
    x = np.full(m.n, 1.0 / m.n) if x0 is None else np.asarray(x0, dtype=float)
    records: list[BranchRecord] = []
    events: list[Event] = []
    branch = 0
    for i, phi in enumerate(grid):
        mp = m.with_phi(float(phi))
        jump = False
        if i == 0:
            rp = integrate_to_rest(mp, x, opts.integrate)
        else:
            rp, _ = _correct(mp, x, opts)
            step = float(np.max(np.abs(rp.x - x)))
            if step > opts.max_jump and _is_jump(m, x, grid[i - 1], phi, step, opts):
                events.append(Event(float(phi), None, cls, "branch-jump"))
                jump = True
        tries = 0
        while rp.verdict == "unstable" and tries < opts.max_retries:
            d, k = _seed_direction(mp, rp, opts.member)
            kind = "uniform-instability" if k is not None else "branch-instability"
            if not events or events[-1].phi != float(phi) or events[-1].kind != kind:
                events.append(Event(float(phi), k, cls, kind))
            rp = integrate_to_rest(mp, _nudge(rp.x, d, opts.zeta), opts.integrate)
            jump = True
            tries += 1
        if not rp.converged or rp.verdict == "unstable":
            # branch lost: restart from the perturbed uniform state
            events.append(Event(float(phi), None, cls, "branch-loss"))
            rp = integrate_to_rest(mp, _restart_state(mp, opts), opts.integrate)
            jump = True
        if jump:
            branch += 1
        x = rp.x
        records.append(
            BranchRecord(
                float(phi),
                x.copy(),
                rp.verdict,
                peaks_for(mp, x),
                is_uniform(x),
                branch,
                float(np.max(np.real(rp.jacobian_eigs), initial=-np.inf)),
                jump,
            )
        )
    return BifurcationDiagram(m.model, direction, cls, tuple(records), tuple(events))
