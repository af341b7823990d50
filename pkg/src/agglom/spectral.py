"""Spectrum of the payoff elasticity at the uniform state and model classes.

At the uniform state of a racetrack the elasticity matrix is ``G(Dbar)``, so
mode ``k`` has eigenvalue ``omega_k = G(chi_k)``.  Class membership is read
off the sign pattern of the net gain ``G#`` on (0, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from . import geometry as geo
from .models import ModelInstance, RationalGain, gain_function, payoff_and_wages, payoff

ROOT_TOL = 1e-12
DOUBLE_ROOT_TOL = 1e-10
FD_STEP = 1e-6

CLASSES = ("I", "II", "III", "AlwaysStable", "AlwaysUnstable", "Unclassified")


# --------------------------------------------------------------------------
# Root isolation (Descartes rule on Moebius-transformed intervals)
# --------------------------------------------------------------------------


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1)
    nz = np.nonzero(np.abs(c) > 1e-14 * scale)[0]
    return c[: nz[-1] + 1]


def _exact(c: Sequence[float]) -> list[Fraction]:
    return [Fraction(float(v)) for v in c]


def _xval(c: list[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for coef in reversed(c):
        acc = acc * x + coef
    return acc


def _sign(v: Fraction) -> int:
    return (v > 0) - (v < 0)


def _compose_linear(c: list[Fraction], a: Fraction, b: Fraction) -> list[Fraction]:
    """Coefficients of ``p(a + b t)``."""
    out = [Fraction(0)] * len(c)
    for coef in reversed(c):
        # out = out * (a + b t) + coef
        nxt = [Fraction(0)] * len(c)
        for i, o in enumerate(out):
            if o:
                nxt[i] += o * a
                if i + 1 < len(c):
                    nxt[i + 1] += o * b
        nxt[0] += coef
        out = nxt
    return out


def _descartes_bound(c: list[Fraction], lo: Fraction, hi: Fraction) -> int:
    """Upper bound on the number of roots in (lo, hi), exact when 0 or 1.

    ``x = lo + (hi - lo) y`` maps (0, 1) onto (lo, hi) and ``y = 1/(1+t)``
    maps (0, inf) onto (0, 1).  Exact rational arithmetic keeps roots that
    sit next to a split point from slipping through rounding.
    """
    p = _compose_linear(c, lo, hi - lo)
    rev = _compose_linear(p[::-1], Fraction(1), Fraction(1))
    signs = [_sign(v) for v in rev if v]
    return sum(1 for s0, s1 in zip(signs, signs[1:]) if s0 != s1)


def _bisect(c: list[Fraction], lo: Fraction, hi: Fraction, tol: float) -> float:
    slo = _sign(_xval(c, lo))
    for _ in range(200):
        mid = (lo + hi) / 2
        sm = _sign(_xval(c, mid))
        if sm == 0:
            return float(mid)
        if sm == slo:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
        # keep denominators small: snap to the nearest float
        lo, hi = Fraction(float(lo)), Fraction(float(hi))
    return float((lo + hi) / 2)


def _split(c: list[Fraction], a: Fraction, b: Fraction):
    """Two halves of (a, b) cut at a point where the polynomial is nonzero."""
    for frac in (Fraction(1, 2), Fraction(7, 16), Fraction(9, 16), Fraction(13, 32)):
        mid = a + frac * (b - a)
        if _xval(c, mid) != 0:
            break
    return (a, mid), (mid, b)


def _inside(c: list[Fraction], a: Fraction, b: Fraction) -> tuple[Fraction, Fraction]:
    """Endpoints pulled inward past any zero sitting exactly on them."""
    out = []
    for end, other in ((a, b), (b, a)):
        e = end
        if _xval(c, e) == 0:
            step = (other - end) / 1024
            # the sliver must not swallow the interior root
            while _descartes_bound(c, *sorted((end, end + step))) > 0:
                step /= 1024
            e = end + step
        out.append(e)
    return out[0], out[1]


def isolate_roots(coeffs: Sequence[float], lo: float = 0.0, hi: float = 1.0, tol: float = ROOT_TOL):
    """Real roots of a polynomial inside the open interval (lo, hi).

    Returns ``(roots, clustered)``; ``clustered`` lists intervals narrower than
    ``tol`` that still hold more than one sign variation (near-multiple roots).
    """
    c = _trim(coeffs)
    if lo == 0.0:
        # an exact root at the origin lies outside the open interval
        while len(c) > 1 and c[0] == 0.0:
            c = c[1:]
    if len(c) <= 1:
        return [], []
    cx = _exact(c)
    roots: list[float] = []
    clustered: list[tuple[float, float]] = []
    stack = [(Fraction(float(lo)), Fraction(float(hi)))]
    while stack:
        a, b = stack.pop()
        v = _descartes_bound(cx, a, b)
        if v == 0:
            continue
        if v == 1:
            a_in, b_in = _inside(cx, a, b)
            if _sign(_xval(cx, a_in)) != _sign(_xval(cx, b_in)):
                roots.append(_bisect(cx, a_in, b_in, tol))
                continue
        if b - a < tol:
            clustered.append((float(a), float(b)))
            continue
        stack.extend(reversed(_split(cx, a, b)))
    roots = sorted(r for r in roots if lo + tol < r < hi - tol)
    return roots, clustered


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    cls: str
    roots: tuple[float, ...]
    signs: tuple[int, ...]
    near_double: bool = False
    discriminant: Optional[float] = None
    warnings: tuple[str, ...] = ()

    @property
    def chi_star(self) -> Optional[float]:
        """Largest root where G# turns from positive to negative."""
        for r, (s0, s1) in reversed(list(zip(self.roots, zip(self.signs, self.signs[1:])))):
            if s0 > 0 > s1:
                return r
        return None

    @property
    def chi_star_star(self) -> Optional[float]:
        """Smallest root where G# turns from negative to positive."""
        for r, (s0, s1) in zip(self.roots, zip(self.signs, self.signs[1:])):
            if s0 < 0 < s1:
                return r
        return None

    def as_dict(self) -> dict:
        return {
            "class": self.cls,
            "roots": list(self.roots),
            "signs": list(self.signs),
            "near_double": self.near_double,
            "discriminant": self.discriminant,
            "warnings": list(self.warnings),
        }


def quadratic_conditions(c0: float, c1: float, c2: float) -> dict:
    """Coefficient conditions for each class of a quadratic net gain."""
    disc = c1 * c1 - 4.0 * c0 * c2
    g1 = c0 + c1 + c2
    return {
        "discriminant": disc,
        "I": c0 > 0 > g1,
        "II": c0 < 0 < g1,
        "III": c0 < 0 and g1 < 0 and c2 < 0 and disc > 0 and 0 < -c1 / (2 * c2) < 1,
    }


_PATTERNS = {
    (1, -1): "I",
    (-1, 1): "II",
    (-1, 1, -1): "III",
    (-1,): "AlwaysStable",
    (1,): "AlwaysUnstable",
}


def classify(g: RationalGain) -> Classification:
    grid = np.linspace(0.0, 1.0, 1001)
    if np.any(g.flat(grid) <= 0):
        raise ValueError("denominator of the gain function must be positive on [0, 1]")
    c = _trim(g.num)
    roots, clustered = isolate_roots(c)
    cuts = [0.0, *roots, 1.0]
    signs = []
    for a, b in zip(cuts, cuts[1:]):
        vals = P.polyval(a + (b - a) * np.array([0.5, 0.3, 0.7, 0.1, 0.9]), c)
        nz = vals[vals != 0.0]
        s = int(np.sign(nz[0])) if nz.size else 0
        if not signs or s != signs[-1]:
            signs.append(s)
    # merge roots of even multiplicity (no sign change) out of the root list
    kept = [r for r in roots if _changes_sign(c, r)]
    near_double = bool(clustered) or len(kept) != len(roots) or _touches_zero(c)
    warnings: list[str] = []
    disc = None
    if len(c) == 3:
        cond = quadratic_conditions(*c)
        disc = float(cond["discriminant"])
        if disc < 0:
            warnings.append(
                f"quadratic net gain has negative discriminant c1^2-4c0c2 = {disc:.6g}; "
                "no Class III root pair exists"
            )
    if near_double:
        warnings.append("net gain nearly touches zero; classification sits on a boundary case")
    cls = _PATTERNS.get(tuple(s for s in signs if s != 0), "Unclassified")
    return Classification(cls, tuple(kept), tuple(signs), near_double, disc, tuple(warnings))


def _changes_sign(c: np.ndarray, r: float, h: float = 1e-9) -> bool:
    return np.sign(P.polyval(r - h, c)) != np.sign(P.polyval(r + h, c))


def _touches_zero(c: np.ndarray) -> bool:
    crit, _ = isolate_roots(P.polyder(c))
    return any(abs(P.polyval(r, c)) < DOUBLE_ROOT_TOL and not _changes_sign(c, r) for r in crit)


# --------------------------------------------------------------------------
# Break points and omega curves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BreakPoints:
    cls: str
    phi_star: Optional[float] = None
    phi_star_star: Optional[float] = None
    chi_star: Optional[float] = None
    chi_star_star: Optional[float] = None
    modes_star: tuple[int, ...] = ()
    modes_star_star: tuple[int, ...] = ()

    def as_dict(self, n: Optional[int] = None) -> dict:
        out = {"class": self.cls}
        for key in ("phi_star", "phi_star_star", "chi_star", "chi_star_star"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.modes_star:
            out["modes_star"] = list(self.modes_star)
        if self.modes_star_star:
            out["modes_star_star"] = list(self.modes_star_star)
        if n == 2 and "phi_star" not in out and self.phi_star_star is not None:
            # with two regions the single mode is both k=1 and k=N/2
            out["phi_star"] = self.phi_star_star
        return out


def _crossings(n: int, chi_target: float) -> dict[int, float]:
    return {k: geo.chi_inverse(n, k, chi_target) for k in range(1, geo.n_modes(n) + 1)}


def break_points(m: ModelInstance, n: Optional[int] = None) -> BreakPoints:
    """Freeness levels where the uniform state changes stability.

    Class I loses stability at ``phi_star`` when the smallest eigenvalue
    falls below ``chi*``; Class II gains it at ``phi_star_star`` once the
    largest eigenvalue ``chi_1`` falls below ``chi**``.
    """
    n = m.n if n is None else n
    c = classify(gain_function(m))
    out: dict = {"cls": c.cls}
    tol = 1e-9
    if c.cls in ("I", "III") and c.chi_star is not None:
        cross = _crossings(n, c.chi_star)
        first = min(cross.values())
        out.update(
            phi_star=first,
            chi_star=c.chi_star,
            modes_star=tuple(k for k, p in cross.items() if p - first < tol),
        )
    if c.cls in ("II", "III") and c.chi_star_star is not None:
        cross = _crossings(n, c.chi_star_star)
        last = max(cross.values())
        out.update(
            phi_star_star=last,
            chi_star_star=c.chi_star_star,
            modes_star_star=tuple(k for k, p in cross.items() if last - p < tol),
        )
    return BreakPoints(**out)


@dataclass(frozen=True)
class SpectralReport:
    phi: np.ndarray
    omegas: np.ndarray  # shape (len(phi), M); column k-1 holds mode k
    omega_max_mode: np.ndarray
    stable_ranges: tuple[tuple[float, float], ...] = field(default=())

    @property
    def omega_max(self) -> np.ndarray:
        return self.omegas.max(axis=1)


def omega_table(g: RationalGain, n: int, phi_grid: Sequence[float]) -> np.ndarray:
    ks = np.arange(1, geo.n_modes(n) + 1)
    return np.array([g(geo.chi(n, ks, phi)) for phi in phi_grid])


def stable_ranges(phi: np.ndarray, stable: np.ndarray) -> tuple[tuple[float, float], ...]:
    out = []
    start = None
    for p, s in zip(phi, stable):
        if s and start is None:
            start = p
        if not s and start is not None:
            out.append((start, prev))
            start = None
        prev = p
    if start is not None:
        out.append((start, prev))
    return tuple((float(a), float(b)) for a, b in out)


def omega_curves(m: ModelInstance, n: Optional[int], phi_grid: Sequence[float]) -> SpectralReport:
    n = m.n if n is None else n
    phi = np.asarray(phi_grid, dtype=float)
    if np.any((phi <= 0) | (phi >= 1)):
        raise ValueError("phi grid must lie inside (0, 1)")
    om = omega_table(gain_function(m), n, phi)
    mode = om.argmax(axis=1) + 1
    return SpectralReport(phi, om, mode, stable_ranges(phi, om.max(axis=1) < 0))


# --------------------------------------------------------------------------
# Numerical oracle
# --------------------------------------------------------------------------


def numeric_elasticity(m: ModelInstance, h: float = FD_STEP) -> np.ndarray:
    """Central-difference elasticity at the uniform state on zero-sum directions.

    Column ``j`` differences the payoff along ``e_j - 1/N``, so the result is
    ``V C`` with ``C`` the centering projector.  Multiplicative models are
    scaled by ``xbar/vbar``, the quasilinear model by ``xbar``.
    """
    n = m.n
    xbar = 1.0 / n
    x0 = np.full(n, xbar)
    v0, w0 = payoff_and_wages(m, x0)
    step = h * xbar
    out = np.empty((n, n))
    for j in range(n):
        d = np.full(n, -1.0 / n)
        d[j] += 1.0
        vp = payoff(m, x0 + step * d, w0)
        vm = payoff(m, x0 - step * d, w0)
        out[:, j] = (vp - vm) / (2.0 * step)
    scale = xbar if m.quasilinear else xbar / float(np.mean(v0))
    return out * scale


def circulant_defect(V: np.ndarray) -> float:
    """Largest mismatch between each row and the cyclic shift of the first."""
    first = V[0]
    return float(max(np.max(np.abs(np.roll(first, i) - V[i])) for i in range(len(V))))


def mode_eigenvalues(V: np.ndarray, es: geo.EigenSystem) -> np.ndarray:
    """Rayleigh quotients of ``V`` on the basis vectors of modes 1..M."""
    B = es.basis()[:, 1:]
    return np.einsum("ij,ik,kj->j", B, V, B)


@dataclass(frozen=True)
class CrossValidation:
    model: str
    phi: np.ndarray
    analytic: np.ndarray  # (len(phi), n-1) omega per basis vector
    numeric: np.ndarray
    ratios: np.ndarray
    sign_mismatches: int
    max_spread: float
    max_circulant_defect: float
    scale: float

    @property
    def ok(self) -> bool:
        return self.sign_mismatches == 0 and self.max_spread < 1e-4


def cross_validate(m: ModelInstance, phi_grid: Sequence[float]) -> CrossValidation:
    """Compare analytic ``omega_k`` with the finite-difference spectrum."""
    g = gain_function(m)
    an, nu, defects = [], [], []
    for phi in phi_grid:
        mp = m.with_phi(float(phi))
        es = geo.racetrack_eigensystem(mp.n, float(phi))
        V = numeric_elasticity(mp)
        defects.append(circulant_defect(V))
        nu.append(mode_eigenvalues(V, es))
        an.append(np.array([g(es.chis[k]) for k in es.modes[1:]]) / g.scale)
    an, nu = np.array(an), np.array(nu)
    ratios = nu / an
    mism = int(np.sum(np.sign(an) != np.sign(nu)))
    spread = np.max((ratios.max(axis=1) - ratios.min(axis=1)) / np.abs(ratios.mean(axis=1)))
    return CrossValidation(
        m.model,
        np.asarray(phi_grid, dtype=float),
        an * g.scale,
        nu,
        ratios,
        mism,
        float(spread),
        float(max(defects)),
        g.scale,
    )
