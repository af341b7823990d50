import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agglom import geometry as geo
from agglom import models as M
from agglom import sensitivity as S


def ring(name, n=8, phi=0.5, **kw):
    return M.make_model(name, geo.build_racetrack(n, phi), **kw)


def test_lambda_zero_mode_and_length():
    lam = S.model_lambdas(ring("RRH"), "amenity")
    assert lam.shape == (5,) and lam[0] == 0.0
    assert np.all(lam[1:] > 0)


def test_unstable_uniform_rejected():
    with pytest.raises(S.UnstableUniformError):
        S.model_lambdas(ring("Krugman", phi=0.5), "amenity")


def test_lambda_formula_frozen():
    # Beckmann: G = chi - gamma, Gn = 1, xbar = 1/N
    lam = S.model_lambdas(ring("Beckmann", phi=0.9), "amenity")
    chis = geo.chi(8, np.arange(1, 5), 0.9)
    np.testing.assert_allclose(lam[1:], -(1 / 8) / (chis - 0.5), rtol=1e-12)


@pytest.mark.parametrize(
    "name, ch, phi",
    [("Beckmann", "amenity", 0.8), ("Krugman", "immobile-mass", 0.02), ("RRH", "productivity", 0.4)],
)
def test_brute_force_matches_lambda(name, ch, phi):
    m = ring(name, n=6, phi=phi)
    X = S.brute_force_dx_da(m, ch)
    es = geo.racetrack_eigensystem(6, phi)
    np.testing.assert_allclose(S.project_modes(X, es)[1:], S.model_lambdas(m, ch)[1:], rtol=1e-3)


@settings(max_examples=30, deadline=None)
@given(coef=st.lists(st.floats(-1, 1), min_size=5, max_size=5))
def test_rho_is_spectral_sum(coef):
    es = geo.racetrack_eigensystem(8, 0.6)
    lam = S.model_lambdas(ring("RRH", phi=0.6), "amenity")
    eps = sum(c * z for c, z in zip(coef, es.vectors[1:6]))
    # rho equals eps' X eps with X built from the spectrum
    B = es.basis()
    X = B @ np.diag([lam[k] for k in es.modes]) @ B.T
    assert S.rho(lam, eps, es) == pytest.approx(eps @ X @ eps, abs=1e-12)


def test_delta_derivative():
    m = ring("Krugman", phi=0.02)
    delta, dd = S.delta_function(M.gain_function(m), M.gn_function(m, "immobile-mass"))
    h = 1e-6
    assert dd(0.9) == pytest.approx((delta(0.9 + h) - delta(0.9 - h)) / (2 * h), rel=1e-6)


def test_rho_signs():
    grid = np.linspace(0.005, 0.04, 8)
    up = S.rho_and_sign(ring("Krugman"), "immobile-mass", None, grid)
    assert up.rho_prime_sign == "positive" == up.observed_sign
    down = S.rho_and_sign(ring("RRH"), "productivity", None, np.linspace(0.05, 0.95, 10))
    assert down.rho_prime_sign == "negative" == down.observed_sign


def test_unstable_points_are_excluded():
    rep = S.rho_and_sign(ring("Krugman"), "amenity", None, [0.01, 0.02, 0.3, 0.6])
    assert rep.excluded == (0.3, 0.6)
    assert len(rep.phi) == 2


def test_forward_scheme_and_bad_scheme():
    m = ring("Beckmann", n=4, phi=0.8)
    fwd = S.brute_force_dx_da(m, scheme="forward")
    cen = S.brute_force_dx_da(m)
    np.testing.assert_allclose(fwd, cen, rtol=1e-3, atol=1e-6)
    with pytest.raises(ValueError):
        S.brute_force_dx_da(m, scheme="backward")
