"""Model catalogue: payoffs, market (wage) solvers, gain and response functions.

Every model maps a distribution ``x`` on the simplex to a payoff vector
``v(x)``.  Most models are multiplicative (log payoff is the natural scale) and
their elasticity at the uniform state is ``(xbar/vbar) grad v``.  The
Pflueger-Suedekum model is quasilinear, so its elasticity is ``xbar grad v``.

Gravity-type models share one wage system,

    w_i x_i = sum_j m_ij e_j,    m_ij = q_i phi_ij / sum_k q_k phi_kj,

with ``q_k = s_k w_k**(1-sigma)`` and expenditure ``e_j = kappa_j w_j + nu_j``.
Dividing by ``q_i`` gives ``w_i**sigma = (s_i/x_i) sum_j phi_ij e_j / Delta_j``,
which stays well defined when ``x_i = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .geometry import ProximityMatrix, rebuild

EPS_X = 1e-12
WAGE_TOL = 1e-10
FP_DAMPING = 0.5
FP_MAXITER = 10_000

MODELS = (
    "Beckmann",
    "Krugman",
    "HelpmanPL",
    "HelpmanLL",
    "PfluegerSuedekum",
    "AllenArkolakis",
    "RRH",
)

ALIASES = {
    "beckmann": "Beckmann",
    "krugman": "Krugman",
    "helpmanpl": "HelpmanPL",
    "helpman-pl": "HelpmanPL",
    "helpmanll": "HelpmanLL",
    "helpman-ll": "HelpmanLL",
    "pfluegersuedekum": "PfluegerSuedekum",
    "ps": "PfluegerSuedekum",
    "allenarkolakis": "AllenArkolakis",
    "aa": "AllenArkolakis",
    "rrh": "RRH",
}

# Parameters each model reads; everything else must stay unset.
USES = {
    "Beckmann": ("gamma",),
    "Krugman": ("mu", "sigma", "L"),
    "HelpmanPL": ("mu", "sigma"),
    "HelpmanLL": ("mu", "sigma"),
    "PfluegerSuedekum": ("mu", "sigma", "L", "gamma"),
    "AllenArkolakis": ("alpha", "beta", "sigma"),
    "RRH": ("mu", "sigma"),
}

DEFAULTS = {
    "Beckmann": {"gamma": 0.5},
    "Krugman": {"mu": 0.5, "sigma": 10.0, "L": 8.0},
    "HelpmanPL": {"mu": 0.75, "sigma": 3.0},
    "HelpmanLL": {"mu": 0.75, "sigma": 3.0},
    "PfluegerSuedekum": {"mu": 0.4, "sigma": 2.5, "L": 4.0, "gamma": 0.2},
    "AllenArkolakis": {"alpha": 0.5, "beta": -0.3, "sigma": 6.0},
    "RRH": {"mu": 0.5, "sigma": 5.0},
}

CHARACTERISTICS = ("amenity", "immobile-mass", "productivity")


class SolverError(RuntimeError):
    """Market solver failed to reach the requested tolerance."""

    def __init__(self, message: str, residual: float = math.nan):
        super().__init__(message)
        self.residual = residual


def canonical_name(name: str) -> str:
    if name in MODELS:
        return name
    key = name.replace("_", "").lower()
    if key not in ALIASES:
        raise ValueError(f"unknown model {name!r}; choose from {', '.join(MODELS)}")
    return ALIASES[key]


@dataclass(frozen=True)
class Params:
    """Named real parameters; unused ones stay ``None``."""

    mu: Optional[float] = None
    sigma: Optional[float] = None
    gamma: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    L: Optional[float] = None
    tau: Optional[float] = None
    eta: float = 0.0

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class ModelInstance:
    """A catalogued model bound to parameters, characteristics and a geography.

    ``l`` is the immobile mass per region, ``a`` the model's own
    characteristic (housing stock for the Helpman and Pflueger-Suedekum
    models, productivity for RRH, unused otherwise) and ``amenity`` a
    multiplicative amenity shifter (additive for the quasilinear model).
    """

    model: str
    params: Params
    geometry: ProximityMatrix
    l: np.ndarray = field(default=None, repr=False)
    a: np.ndarray = field(default=None, repr=False)
    amenity: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        n = self.geometry.n
        object.__setattr__(self, "model", canonical_name(self.model))
        p = self.params
        L = p.L if p.L is not None else 0.0
        defaults = {"l": np.full(n, L / n), "a": np.ones(n), "amenity": np.ones(n)}
        for name, default in defaults.items():
            val = getattr(self, name)
            val = default if val is None else np.array(val, dtype=float)
            if val.shape != (n,):
                raise ValueError(f"{name} must have length {n}")
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        validate(self)

    @property
    def n(self) -> int:
        return self.geometry.n

    @property
    def quasilinear(self) -> bool:
        return self.model == "PfluegerSuedekum"

    def with_phi(self, phi: float) -> "ModelInstance":
        return replace(self, geometry=rebuild(self.geometry, phi))

    def with_vectors(self, **vectors: np.ndarray) -> "ModelInstance":
        return replace(self, **vectors)


def validate(m: ModelInstance) -> None:
    p = m.params
    used = USES[m.model]
    for name in ("mu", "sigma", "gamma", "alpha", "beta", "L"):
        val = getattr(p, name)
        if name in used and val is None:
            raise ValueError(f"{m.model} requires parameter {name}")
        if val is not None and not np.isfinite(val):
            raise ValueError(f"parameter {name} must be finite")
    if p.sigma is not None and p.sigma <= 1.0:
        raise ValueError(f"sigma must exceed 1, got {p.sigma}")
    if p.mu is not None and not 0.0 < p.mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {p.mu}")
    if p.L is not None and p.L < 0.0:
        raise ValueError("L must be nonnegative")
    if p.eta < 0.0:
        raise ValueError("eta must be nonnegative")
    if m.model == "PfluegerSuedekum" and p.L == 0.0:
        raise ValueError("PfluegerSuedekum needs L > 0")
    if np.any(m.l < 0):
        raise ValueError("immobile masses must be nonnegative")
    if np.any(m.a <= 0) or np.any(m.amenity <= 0):
        raise ValueError("characteristics a and amenity must be positive")


def make_model(
    name: str, geometry: ProximityMatrix, *, l=None, a=None, amenity=None, **params
) -> ModelInstance:
    """Build a model, filling unspecified parameters from ``DEFAULTS``."""
    model = canonical_name(name)
    unknown = set(params) - set(Params.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown parameters: {sorted(unknown)}")
    merged = dict(DEFAULTS[model])
    merged.update({k: v for k, v in params.items() if v is not None})
    extra = set(merged) - set(USES[model]) - {"eta", "tau"}
    if extra:
        raise ValueError(f"{model} does not use parameters {sorted(extra)}")
    merged = {k: float(v) for k, v in merged.items()}
    return ModelInstance(model, Params(**merged), geometry, l=l, a=a, amenity=amenity)


# --------------------------------------------------------------------------
# Market solver
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MarketState:
    w: np.ndarray
    residual: float
    iterations: int = 0
    method: str = "newton"


@dataclass(frozen=True)
class _Gravity:
    """Ingredients of the shared wage system at a given ``x``."""

    phi: np.ndarray
    s: np.ndarray  # q = s * w**(1-sigma)
    log_r: np.ndarray  # log(s_i / x_i)
    kappa: np.ndarray  # e = kappa * w + nu
    nu: np.ndarray
    sigma: float
    homogeneous: bool
    x: np.ndarray


def _gravity(m: ModelInstance, x: np.ndarray) -> _Gravity:
    p = m.params
    phi = m.geometry.entries
    sig = p.sigma
    zeros = np.zeros(m.n)
    if m.model == "Krugman":
        return _Gravity(phi, x, zeros, p.mu * x, p.mu * m.l, sig, False, x)
    if m.model == "HelpmanPL":
        return _Gravity(phi, x, zeros, p.mu * x, p.mu * x, sig, False, x)
    if m.model == "HelpmanLL":
        return _Gravity(phi, x, zeros, x, zeros, sig, True, x)
    if m.model == "RRH":
        return _Gravity(phi, x * m.a, np.log(m.a), x, zeros, sig, True, x)
    if m.model == "AllenArkolakis":
        xf = np.maximum(x, EPS_X)
        expo = p.alpha * (sig - 1.0)
        return _Gravity(phi, xf**expo, (expo - 1.0) * np.log(xf), x, zeros, sig, True, x)
    raise ValueError(f"{m.model} has no wage system")


def _wage_terms(g: _Gravity, u: np.ndarray):
    w = np.exp(u)
    q = g.s * np.exp((1.0 - g.sigma) * u)
    delta = g.phi.T @ q
    e = g.kappa * w + g.nu
    F = g.phi @ (e / delta)
    return w, q, delta, e, F


def _wage_residual(g: _Gravity, u: np.ndarray) -> np.ndarray:
    F = _wage_terms(g, u)[4]
    return g.sigma * u - g.log_r - np.log(F)


def _wage_jacobian(g: _Gravity, u: np.ndarray) -> np.ndarray:
    w, q, delta, e, F = _wage_terms(g, u)
    jf = g.phi * (g.kappa * w / delta)[None, :]
    jf += (g.sigma - 1.0) * ((g.phi * (e / delta**2)[None, :]) @ g.phi.T) * q[None, :]
    return g.sigma * np.eye(len(u)) - jf / F[:, None]


def _normalize(g: _Gravity, u: np.ndarray) -> np.ndarray:
    # sum_i w_i x_i = 1 pins the level of homogeneous systems
    return u - np.log(np.sum(np.exp(u) * g.x))


def _newton_wages(g: _Gravity, u: np.ndarray, tol: float, maxiter: int = 50):
    r = _wage_residual(g, u)
    res = np.max(np.abs(r))
    for it in range(1, maxiter + 1):
        if res < 1e-14:
            return u, res, it - 1
        J = _wage_jacobian(g, u)
        if g.homogeneous:
            cons = np.exp(u) * g.x
            A = np.vstack([J, cons / cons.sum()])
            step = np.linalg.lstsq(A, np.append(-r, 0.0), rcond=None)[0]
        else:
            step = np.linalg.solve(J, -r)
        t = 1.0
        while True:
            trial = u + t * step
            if g.homogeneous:
                trial = _normalize(g, trial)
            r_new = _wage_residual(g, trial)
            res_new = np.max(np.abs(r_new))
            if np.isfinite(res_new) and res_new < res * (1.0 - 1e-4 * t):
                break
            t *= 0.5
            if t < 1e-6:
                return u, res, it
        u, r, res = trial, r_new, res_new
    return u, res, maxiter


def _fixed_point_wages(g: _Gravity, u: np.ndarray, tol: float):
    for it in range(1, FP_MAXITER + 1):
        F = _wage_terms(g, u)[4]
        u_new = (g.log_r + np.log(F)) / g.sigma
        u = u + FP_DAMPING * (u_new - u)
        if g.homogeneous:
            u = _normalize(g, u)
        res = np.max(np.abs(_wage_residual(g, u)))
        if res < tol:
            return u, res, it
    return u, res, FP_MAXITER


def solve_market(
    m: ModelInstance,
    x: np.ndarray,
    w0: Optional[np.ndarray] = None,
    tol: float = WAGE_TOL,
    method: str = "auto",
) -> MarketState:
    """Solve the wage system at ``x``.

    ``method="auto"`` runs Newton from ``w0`` and falls back to the damped
    log-wage fixed point.  The residual is the sup-norm of the log-form
    market-clearing defect.
    """
    x = np.asarray(x, dtype=float)
    if m.model == "PfluegerSuedekum":
        w = _ps_wages(m, x)
        return MarketState(w, 0.0, 0, "closed-form")
    if m.model == "Beckmann":
        return MarketState(np.ones(m.n), 0.0, 0, "none")
    g = _gravity(m, x)
    if w0 is None:
        u0 = np.zeros(m.n)
    else:
        u0 = np.log(np.asarray(w0, dtype=float))
    if g.homogeneous:
        u0 = _normalize(g, u0)
    u, res, its = (u0, np.inf, 0)
    used = method
    if method in ("auto", "newton"):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            u, res, its = _newton_wages(g, u0, tol)
        used = "newton"
        if not (res < tol) and method == "auto":
            start = u if np.all(np.isfinite(u)) else u0
            u, res, its = _fixed_point_wages(g, start, tol)
            used = "fixed-point"
    elif method == "fixed-point":
        u, res, its = _fixed_point_wages(g, u0, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not res < tol:
        raise SolverError(f"{m.model} wage solver stalled at residual {res:.3e}", res)
    return MarketState(np.exp(u), float(res), its, used)


def expenditure_shares(m: ModelInstance, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Matrix ``m_ij`` of the wage system (column-stochastic)."""
    g = _gravity(m, np.asarray(x, dtype=float))
    q = g.s * w ** (1.0 - g.sigma)
    num = q[:, None] * g.phi
    return num / num.sum(axis=0, keepdims=True)


def market_defect(m: ModelInstance, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Level defect ``w_i x_i - sum_j m_ij e_j``."""
    g = _gravity(m, np.asarray(x, dtype=float))
    e = g.kappa * w + g.nu
    return w * g.x - expenditure_shares(m, x, w) @ e


def _ps_wages(m: ModelInstance, x: np.ndarray) -> np.ndarray:
    p = m.params
    phi = m.geometry.entries
    return (p.mu / p.sigma) * phi @ ((x + m.l) / (phi.T @ x))


# --------------------------------------------------------------------------
# Payoffs
# --------------------------------------------------------------------------


def payoff(
    m: ModelInstance, x: np.ndarray, w0: Optional[np.ndarray] = None
) -> np.ndarray:
    return payoff_and_wages(m, x, w0)[0]


def payoff_and_wages(m: ModelInstance, x: np.ndarray, w0: Optional[np.ndarray] = None):
    """Payoff vector together with the market wages used to compute it."""
    x = np.asarray(x, dtype=float)
    if x.shape != (m.n,):
        raise ValueError(f"x must have length {m.n}")
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    p = m.params
    phi = m.geometry.entries
    xf = np.maximum(x, EPS_X)
    if m.model == "PfluegerSuedekum":
        w = _ps_wages(m, x)
        delta = phi.T @ x
        v = (
            p.mu / (p.sigma - 1.0) * np.log(delta)
            - p.gamma * np.log((x + m.l) / m.a)
            + w
            + m.amenity
            - p.eta * np.log(xf)
        )
        return v, w
    if m.model == "Beckmann":
        v = xf ** (-p.gamma) * (phi @ x)
        w = np.ones(m.n)
    else:
        st = solve_market(m, x, w0)
        w = st.w
        g = _gravity(m, x)
        delta = phi.T @ (g.s * w ** (1.0 - p.sigma))
        if m.model == "Krugman":
            v = w * delta ** (p.mu / (p.sigma - 1.0))
        elif m.model == "AllenArkolakis":
            v = xf**p.beta * w * delta ** (1.0 / (p.sigma - 1.0))
        else:
            gam = 1.0 - p.mu
            income = w + 1.0 if m.model == "HelpmanPL" else w
            housing = m.a if m.model in ("HelpmanPL", "HelpmanLL") else 1.0
            v = (xf / housing) ** (-gam) * income**p.mu * delta ** (p.mu / (p.sigma - 1.0))
    v = v * m.amenity
    if p.eta:
        v = v * xf ** (-p.eta)
    return v, w


# --------------------------------------------------------------------------
# Gain functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalGain:
    """``G(chi) = scale * num(chi) / den(chi)``, coefficients in ascending powers.

    ``num`` is the net gain G# (sign-equivalent to G because ``den`` > 0 on
    [0, 1]).  ``scale`` is the declared positive constant relating the
    eigenvalues of the numerical elasticity matrix to ``num/den``.
    """

    num: tuple[float, ...]
    den: tuple[float, ...] = (1.0,)
    scale: float = 1.0
    scale_note: str = ""

    def sharp(self, chi) -> np.ndarray:
        return np.polynomial.polynomial.polyval(chi, self.num)

    def flat(self, chi) -> np.ndarray:
        return np.polynomial.polynomial.polyval(chi, self.den)

    def __call__(self, chi) -> np.ndarray:
        return self.scale * self.sharp(chi) / self.flat(chi)

    def derivative(self, chi) -> np.ndarray:
        P = np.polynomial.Polynomial(self.num)
        Q = np.polynomial.Polynomial(self.den)
        return self.scale * (P.deriv() * Q - P * Q.deriv())(chi) / Q(chi) ** 2

    def offset(self, eta: float) -> "RationalGain":
        """Gain of the same model with ``eta`` subtracted from ``G``."""
        if eta == 0.0:
            return self
        num = np.polynomial.polynomial.polysub(self.num, np.multiply(self.den, eta / self.scale))
        return replace(self, num=tuple(float(c) for c in num))


def _krugman_flat(mu: float, sigma: float) -> tuple[float, ...]:
    return (1.0, -mu / sigma, -(sigma - 1.0) / sigma)


MULT_NOTE = "eigenvalues of (xbar/vbar) grad v equal G"
QL_NOTE = "eigenvalues of xbar grad v equal G (quasilinear payoff)"


def gain_function(m: ModelInstance) -> RationalGain:
    p = m.params
    mu, sig = p.mu, p.sigma
    if m.model == "Beckmann":
        g = RationalGain((-p.gamma, 1.0), scale_note=MULT_NOTE)
    elif m.model == "Krugman":
        c1 = mu * (1.0 / (sig - 1.0) + 1.0 / sig)
        c2 = mu**2 / (sig - 1.0) + 1.0 / sig
        g = RationalGain((0.0, c1, -c2), _krugman_flat(mu, sig), scale_note=MULT_NOTE)
    elif m.model == "HelpmanPL":
        gam = 1.0 - mu
        c1 = mu / (sig - 1.0) + mu * (mu + gam) / sig
        c2 = -(mu**2 / (sig - 1.0) + (mu + gam) / sig - gam)
        g = RationalGain((-gam, c1, c2), _krugman_flat(mu, sig), scale_note=MULT_NOTE)
    elif m.model in ("HelpmanLL", "RRH"):
        gam = 1.0 - mu
        c1 = mu / (sig - 1.0) + (mu + gam) / sig - gam
        g = RationalGain((-gam, c1), (1.0, (sig - 1.0) / sig), scale_note=MULT_NOTE)
    elif m.model == "PfluegerSuedekum":
        L = p.L
        c0 = -p.gamma / (1.0 + L)
        c1 = mu * (1.0 / (sig - 1.0) + 1.0 / sig)
        c2 = -(mu / sig) * (1.0 + L)
        g = RationalGain((c0, c1, c2), scale_note=QL_NOTE)
    elif m.model == "AllenArkolakis":
        ab = p.alpha + p.beta
        c0 = ab - (1.0 + p.alpha) / sig
        c1 = ab + (1.0 - p.beta) / sig
        g = RationalGain((c0, c1), (sig, sig - 1.0), scale=sig, scale_note=MULT_NOTE)
    else:  # pragma: no cover - canonical_name guards this
        raise ValueError(m.model)
    return g.offset(p.eta)


def gn_function(m: ModelInstance, characteristic: str) -> RationalGain:
    """Response of the payoff elasticity to a regional characteristic.

    The returned ``Gn`` satisfies ``A = Gn(Dbar)`` with ``A`` the elasticity
    of payoffs with respect to the characteristic at the uniform state.
    """
    p = m.params
    if characteristic == "amenity":
        abar = float(np.mean(m.amenity))
        # multiplicative shifter: unit elasticity; additive: abar * dv/da = abar
        c = abar if m.quasilinear else 1.0
        return RationalGain((c,), scale_note="amenity response")
    if characteristic == "immobile-mass" and m.model == "Krugman":
        mu, sig = p.mu, p.sigma
        c = (1.0 - mu) / sig
        return RationalGain((0.0, c, -mu * c), _krugman_flat(mu, sig), scale_note="immobile mass")
    if characteristic == "productivity" and m.model == "RRH":
        mu, sig = p.mu, p.sigma
        c = mu / (sig - 1.0)
        return RationalGain((c * (sig - 1.0), c * sig), (sig, sig - 1.0), scale_note="productivity")
    raise ValueError(f"characteristic {characteristic!r} is not supported for {m.model}")


def characteristic_vector(m: ModelInstance, characteristic: str) -> np.ndarray:
    """The vector a given characteristic perturbs."""
    return {"amenity": m.amenity, "immobile-mass": m.l, "productivity": m.a}[characteristic]


def with_characteristic(m: ModelInstance, characteristic: str, values: np.ndarray) -> ModelInstance:
    key = {"amenity": "amenity", "immobile-mass": "l", "productivity": "a"}[characteristic]
    return m.with_vectors(**{key: values})


def quadratic_coefficients(g: RationalGain) -> tuple[float, float, float]:
    c = list(g.num) + [0.0] * (3 - len(g.num))
    if len(c) > 3 and any(abs(v) > 0 for v in c[3:]):
        raise ValueError("net gain is not quadratic")
    return float(c[0]), float(c[1]), float(c[2])
