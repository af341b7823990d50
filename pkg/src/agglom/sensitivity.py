"""Response of the stable uniform equilibrium to regional characteristics.

Near a stable uniform state, a small characteristic perturbation ``eps``
moves the equilibrium by ``X eps`` where ``X`` shares the racetrack
eigenvectors; its eigenvalue on mode ``k`` is

    lambda_k = -(xbar/abar) Gn(chi_k) / G(chi_k),   lambda_0 = 0.

``rho = eps' X eps`` measures how strongly population follows the advantage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import geometry as geo
from .dynamics import IntegrateOptions, integrate_to_rest
from .models import (
    ModelInstance,
    RationalGain,
    characteristic_vector,
    gain_function,
    gn_function,
    with_characteristic,
)


class UnstableUniformError(ValueError):
    """The uniform state is not stable, so comparative statics are void."""


def lambda_spectrum(
    g: RationalGain,
    gn: RationalGain,
    n: int,
    phi: float,
    abar: float = 1.0,
) -> np.ndarray:
    """``lambda_k`` for ``k = 0..M``."""
    ks = np.arange(1, geo.n_modes(n) + 1)
    chis = geo.chi(n, ks, phi)
    G = g(chis)
    if np.any(G >= 0):
        raise UnstableUniformError(f"uniform state is not stable at phi={phi}")
    lam = -(1.0 / n / abar) * gn(chis) / G
    return np.concatenate([[0.0], lam])


def model_lambdas(m: ModelInstance, characteristic: str) -> np.ndarray:
    abar = float(np.mean(characteristic_vector(m, characteristic)))
    return lambda_spectrum(
        gain_function(m), gn_function(m, characteristic), m.n, m.geometry.phi, abar
    )


def brute_force_dx_da(
    m: ModelInstance,
    characteristic: str = "amenity",
    epsilon: float = 1e-6,
    opts: Optional[IntegrateOptions] = None,
    scheme: str = "central",
) -> np.ndarray:
    """Equilibrium response to a bump of size ``epsilon`` in each region.

    ``scheme="central"`` differences the equilibria at ``a +/- eps e_j``, which
    cancels the quadratic term that dominates the one-sided estimate when a
    mode with a large response sits next to a weak one.
    """
    if scheme not in ("central", "forward"):
        raise ValueError(f"unknown scheme {scheme!r}")
    n = m.n
    base = characteristic_vector(m, characteristic)
    xbar = np.full(n, 1.0 / n)

    def settle(j: int, h: float) -> np.ndarray:
        bumped = base.copy()
        bumped[j] += h
        rp = integrate_to_rest(with_characteristic(m, characteristic, bumped), xbar, opts)
        if not rp.converged or rp.verdict != "stable":
            raise RuntimeError(f"perturbed equilibrium for bump {j} did not settle ({rp.verdict})")
        return rp.x

    out = np.empty((n, n))
    for j in range(n):
        if scheme == "central":
            out[:, j] = (settle(j, epsilon) - settle(j, -epsilon)) / (2.0 * epsilon)
        else:
            out[:, j] = (settle(j, epsilon) - xbar) / epsilon
    return out


def project_modes(X: np.ndarray, es: geo.EigenSystem) -> np.ndarray:
    """Mode-wise eigenvalues of a circulant response matrix (k = 0..M)."""
    out = np.zeros(es.M + 1)
    counts = np.zeros(es.M + 1)
    for z, k in zip(es.vectors, es.modes):
        out[k] += z @ X @ z
        counts[k] += 1
    return out / counts


def spectral_coordinates(eps: np.ndarray, es: geo.EigenSystem) -> np.ndarray:
    """Squared projections of ``eps`` summed per mode (k = 0..M)."""
    out = np.zeros(es.M + 1)
    for z, k in zip(es.vectors, es.modes):
        out[k] += float(z @ eps) ** 2
    return out


def rho(lambdas: np.ndarray, eps: np.ndarray, es: geo.EigenSystem) -> float:
    return float(np.sum(spectral_coordinates(eps, es)[1:] * lambdas[1:]))


def delta_function(g: RationalGain, gn: RationalGain):
    """``delta = -Gn/G`` and its derivative as callables of chi."""

    def delta(chi):
        return -gn(chi) / g(chi)

    def ddelta(chi):
        return -(gn.derivative(chi) * g(chi) - gn(chi) * g.derivative(chi)) / g(chi) ** 2

    return delta, ddelta


@dataclass(frozen=True)
class SensitivityReport:
    model: str
    characteristic: str
    phi: np.ndarray
    lambdas: np.ndarray  # (len(phi), M+1)
    rho: np.ndarray
    rho_prime: np.ndarray
    rho_prime_sign: str
    excluded: tuple[float, ...] = ()
    chi_range: tuple[float, float] = (0.0, 1.0)
    delta_curve: tuple[np.ndarray, np.ndarray] = field(default=None, repr=False)

    @property
    def observed_sign(self) -> str:
        inner = self.rho_prime[1:-1] if len(self.rho_prime) > 2 else self.rho_prime
        if np.all(inner > 0):
            return "positive"
        if np.all(inner < 0):
            return "negative"
        return "indeterminate"


def predicted_sign(g: RationalGain, gn: RationalGain, lo: float, hi: float, samples: int = 2001) -> str:
    """Sign of ``rho'`` implied by the sign of ``delta'`` on [lo, hi]."""
    _, dd = delta_function(g, gn)
    chi = np.linspace(lo, hi, samples)
    d = dd(chi)
    if np.all(d < 0):
        return "positive"
    if np.all(d > 0):
        return "negative"
    return "indeterminate"


def cosine_bump(n: int, k: int = 1) -> np.ndarray:
    return geo.mode_vector(n, k, "cos")


def rho_and_sign(
    m: ModelInstance,
    characteristic: str,
    a_perturbation: Optional[np.ndarray],
    phi_grid: Sequence[float],
) -> SensitivityReport:
    """``rho(phi)`` on the stable part of the grid and the sign of ``rho'``."""
    n = m.n
    eps = cosine_bump(n) if a_perturbation is None else np.asarray(a_perturbation, dtype=float)
    g = gain_function(m)
    gn = gn_function(m, characteristic)
    abar = float(np.mean(characteristic_vector(m, characteristic)))
    phis, lams, rhos, excluded = [], [], [], []
    for phi in phi_grid:
        try:
            lam = lambda_spectrum(g, gn, n, float(phi), abar)
        except UnstableUniformError:
            excluded.append(float(phi))
            continue
        es = geo.racetrack_eigensystem(n, float(phi))
        phis.append(float(phi))
        lams.append(lam)
        rhos.append(rho(lam, eps, es))
    phis_a = np.array(phis)
    rhos_a = np.array(rhos)
    drho = np.gradient(rhos_a, phis_a) if len(phis_a) > 1 else np.zeros_like(rhos_a)
    ks = np.arange(1, geo.n_modes(n) + 1)
    if len(phis_a):
        chis = np.concatenate([geo.chi(n, ks, p) for p in phis_a])
        lo, hi = float(chis.min()), float(chis.max())
    else:
        lo, hi = 0.0, 1.0
    grid = np.linspace(lo, hi, 201)
    delta, _ = delta_function(g, gn)
    return SensitivityReport(
        m.model,
        characteristic,
        phis_a,
        np.array(lams),
        rhos_a,
        drho,
        predicted_sign(g, gn, lo, hi),
        tuple(excluded),
        (lo, hi),
        (grid, delta(grid)),
    )
