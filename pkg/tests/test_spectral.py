import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from agglom import geometry as geo
from agglom import models as M
from agglom import spectral as S

RING8 = geo.build_racetrack(8, 0.5)


def model(name, n=8, **kw):
    return M.make_model(name, geo.build_racetrack(n, 0.5), **kw)


@settings(max_examples=80, deadline=None)
@given(roots=st.lists(st.floats(0.01, 0.99), min_size=1, max_size=4, unique=True), lead=st.sampled_from([-1.0, 2.0]))
def test_isolate_roots_recovers_simple_roots(roots, lead):
    roots = sorted(roots)
    assume(np.min(np.diff(roots), initial=1.0) > 1e-3)
    c = lead * np.polynomial.polynomial.polyfromroots(roots)
    found, clustered = S.isolate_roots(c)
    assert not clustered
    np.testing.assert_allclose(found, roots, atol=1e-9)


def test_isolate_roots_ignores_outside_and_origin():
    c = np.polynomial.polynomial.polyfromroots([0.0, 0.4, 1.7])
    found, _ = S.isolate_roots(c)
    np.testing.assert_allclose(found, [0.4], atol=1e-12)


@pytest.mark.parametrize(
    "name, kw, cls",
    [
        ("Krugman", {}, "I"),
        ("HelpmanPL", {}, "II"),
        ("Beckmann", {"gamma": 0.5}, "II"),
        ("Beckmann", {"gamma": 1.2}, "AlwaysStable"),
        ("AllenArkolakis", {}, "II"),
        ("PfluegerSuedekum", {"gamma": 0.2}, "III"),
        ("PfluegerSuedekum", {"gamma": 0.5}, "AlwaysStable"),
        ("HelpmanLL", {}, "II"),
        ("RRH", {}, "AlwaysStable"),
    ],
)
def test_class_table(name, kw, cls):
    assert S.classify(M.gain_function(model(name, **kw))).cls == cls


def test_frozen_roots():
    assert S.classify(M.gain_function(model("Krugman"))).chi_star == pytest.approx(19 / 23, abs=1e-10)
    assert S.classify(M.gain_function(model("AllenArkolakis"))).chi_star_star == pytest.approx(0.12, abs=1e-10)
    ps = S.classify(M.gain_function(model("ps")))
    np.testing.assert_allclose(ps.roots, [0.12137, 0.41196], atol=1e-5)
    assert ps.signs == (-1, 1, -1)


def test_negative_discriminant_warns():
    c = S.classify(M.gain_function(model("ps", gamma=0.5)))
    assert c.discriminant == pytest.approx(-0.13795555555555558)
    assert any("discriminant" in w for w in c.warnings)


def test_near_double_root_flagged():
    c = S.classify(M.RationalGain((-0.25, 1.0, -1.0)))  # -(chi - 1/2)^2
    assert c.near_double
    assert c.cls == "AlwaysStable"


def test_unclassified_pattern():
    c = S.classify(M.RationalGain(tuple(np.polynomial.polynomial.polyfromroots([0.2, 0.5, 0.8]))))
    assert c.cls == "Unclassified"


def test_nonpositive_denominator_rejected():
    with pytest.raises(ValueError):
        S.classify(M.RationalGain((1.0,), (0.5, -1.0)))


@pytest.mark.parametrize(
    "c0, c1, c2, expected",
    [(1.0, -3.0, 0.5, "I"), (-1.0, 3.0, -0.5, "II"), (-0.04, 0.4267, -0.8, "III")],
)
def test_quadratic_conditions_agree_with_classify(c0, c1, c2, expected):
    cond = S.quadratic_conditions(c0, c1, c2)
    assert cond[expected]
    assert S.classify(M.RationalGain((c0, c1, c2))).cls == expected


def test_beckmann_two_regions():
    bp = S.break_points(model("Beckmann", n=2))
    assert bp.phi_star_star == pytest.approx(1 / 3, abs=1e-9)
    assert bp.as_dict(2)["phi_star"] == pytest.approx(1 / 3, abs=1e-9)


def test_krugman_break_point_uses_last_mode():
    bp = S.break_points(model("Krugman"))
    assert bp.modes_star == (4,)
    assert bp.phi_star == pytest.approx(geo.chi_inverse(8, 4, 19 / 23), abs=1e-12)
    assert bp.phi_star == pytest.approx(0.0477275198, abs=1e-9)


def test_class_ii_break_point_uses_first_mode():
    bp = S.break_points(model("AllenArkolakis"))
    assert bp.modes_star_star == (1,)
    assert float(geo.chi(8, 1, bp.phi_star_star)) == pytest.approx(0.12, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(phi=st.floats(0.02, 0.98))
def test_stability_flips_at_break_point(phi):
    m = model("Krugman")
    bp = S.break_points(m)
    assume(abs(phi - bp.phi_star) > 1e-6)
    om = S.omega_table(M.gain_function(m), 8, [phi])[0]
    assert (om.max() < 0) == (phi < bp.phi_star)


def test_omega_curves_ranges():
    rep = S.omega_curves(model("AllenArkolakis"), 8, np.linspace(0.05, 0.95, 19))
    assert rep.omegas.shape == (19, 4)
    (lo, hi), = rep.stable_ranges
    assert hi == pytest.approx(0.95) and lo > S.break_points(model("AllenArkolakis")).phi_star_star
    with pytest.raises(ValueError):
        S.omega_curves(model("Krugman"), 8, [0.0, 0.5])


def test_stable_ranges_helper():
    phi = np.arange(6.0)
    assert S.stable_ranges(phi, np.array([1, 1, 0, 0, 1, 1], bool)) == ((0.0, 1.0), (4.0, 5.0))


@pytest.mark.parametrize("name", ["Krugman", "AllenArkolakis", "PfluegerSuedekum"])
def test_cross_validation_small(name):
    cv = S.cross_validate(model(name), [0.2, 0.6])
    assert cv.ok
    np.testing.assert_allclose(cv.ratios, cv.scale, rtol=1e-4)
    assert cv.max_circulant_defect < 1e-5
