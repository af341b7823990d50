import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from agglom import continuation as C
from agglom import geometry as geo
from agglom import models as M
from agglom.spectral import break_points


@pytest.mark.parametrize(
    "x, expected",
    [
        ([1, 0, 1, 0], 2),
        ([2, 2, 1, 1], 1),
        ([1, 1, 1, 1], 0),
        ([0, 1, 0, 0, 3, 0], 2),
        ([0, 0, 1e-12, 3e-10, 1.2e-9, 5e-9, 1, 5e-9, 1.2e-9, 3e-10, 0, 0], 1),
    ],
)
def test_count_peaks_circle(x, expected):
    assert C.count_peaks(np.array(x, float)) == expected


def test_count_peaks_segment_and_lattice():
    assert C.count_peaks(np.array([3.0, 1, 1, 2]), "segment", (4,), periodic=False) == 2
    grid = np.zeros((4, 4))
    grid[0, 0] = grid[3, 3] = 1.0
    assert C.count_peaks(grid.ravel(), "lattice", (4, 4), periodic=False) == 2
    # on a torus the two corners touch their wrapped neighbours, still two peaks
    assert C.count_peaks(grid.ravel(), "lattice", (4, 4), periodic=True) == 2


@settings(max_examples=60)
@given(x=arrays(np.float64, 10, elements=st.floats(0, 1)), shift=st.integers(0, 9))
def test_peak_count_rotation_invariant(x, shift):
    assert C.count_peaks(x) == C.count_peaks(np.roll(x, shift))


@settings(max_examples=60)
@given(x=arrays(np.float64, 10, elements=st.floats(0, 1)))
def test_peak_count_bounded(x):
    p = C.count_peaks(x)
    assert 0 <= p <= 5
    assert (p == 0) == C.is_uniform(x)


def test_default_grid_and_direction():
    g = C.default_grid()
    assert len(g) == 200 and g[0] == pytest.approx(0.005) and g[-1] == pytest.approx(0.995)
    ring = geo.build_racetrack(8, 0.5)
    assert C.default_direction(M.make_model("aa", ring)) == "down"
    assert C.default_direction(M.make_model("Krugman", ring)) == "up"


def test_bad_grid_and_direction():
    m = M.make_model("Beckmann", geo.build_racetrack(4, 0.5))
    with pytest.raises(ValueError):
        C.sweep(m, [0.1, 0.3, 0.2])
    with pytest.raises(ValueError):
        C.sweep(m, [0.1, 0.2], direction="left")


def test_beckmann_sweep_down_reaches_break():
    m = M.make_model("Beckmann", geo.build_racetrack(4, 0.5))
    bp = break_points(m)
    grid = np.linspace(0.1, 0.9, 17)
    d = C.sweep(m, grid, "down")
    assert d.direction == "down" and d.cls == "II"
    assert d.phi[0] == pytest.approx(0.9)
    assert all(r.verdict != "unstable" for r in d.records)
    above = d.phi > bp.phi_star_star
    assert all(r.uniform for r, a in zip(d.records, above) if a)
    assert not any(r.uniform for r, a in zip(d.records, above) if not a)
    ev = [e for e in d.events if e.kind == "uniform-instability"]
    assert ev and ev[0].mode_k == 1
    assert ev[0].phi < bp.phi_star_star
    assert ev[0].as_dict()["class"] == "II"


def test_peak_sequence_uniform_handling():
    rec = lambda p, u: C.BranchRecord(0.1, np.zeros(2), "stable", p, u, 0, -1.0)
    d = C.BifurcationDiagram("x", "up", "I", (rec(0, True), rec(2, False), rec(2, False), rec(1, False)))
    assert d.peak_sequence() == [2, 1]
    assert d.peak_sequence(uniform_as=8) == [8, 2, 1]


def test_sweep_from_given_state():
    m = M.make_model("Krugman", geo.build_racetrack(4, 0.5))
    x0 = np.array([1.0, 0.0, 0.0, 0.0])
    d = C.sweep(m, [0.5, 0.6, 0.7], "up", x0=x0)
    assert all(r.peaks == 1 and r.verdict != "unstable" for r in d.records)
    np.testing.assert_allclose(d.X.sum(axis=1), 1.0)


@pytest.fixture(scope="module")
def ring_sweeps():
    ring = geo.build_racetrack(8, 0.5)
    out = {}
    for name, kw in [("Krugman", {}), ("AllenArkolakis", {}), ("PfluegerSuedekum", {"gamma": 0.2})]:
        m = M.make_model(name, ring, **kw)
        out[name] = (m, C.sweep(m))
    return out


def _grid_step(d, phi):
    i = int(np.argmin(np.abs(d.phi - phi)))
    return abs(d.phi[min(i + 1, len(d.phi) - 1)] - d.phi[max(i - 1, 0)])


@pytest.mark.slow
@pytest.mark.parametrize("name", ["Krugman", "AllenArkolakis", "PfluegerSuedekum"])
def test_instability_detected_near_break(ring_sweeps, name):
    m, d = ring_sweeps[name]
    bp = break_points(m)
    target = bp.phi_star_star if d.cls == "II" else bp.phi_star
    ev = next(e for e in d.events if e.kind == "uniform-instability")
    assert abs(ev.phi - target) <= _grid_step(d, ev.phi)


@pytest.mark.slow
def test_onset_patterns(ring_sweeps):
    _, kr = ring_sweeps["Krugman"]
    first = next(r for r in kr.records if not r.uniform)
    assert first.peaks == 4
    _, aa = ring_sweeps["AllenArkolakis"]
    assert {r.peaks for r in aa.records if not r.uniform} == {1}


@pytest.mark.slow
@pytest.mark.parametrize("name", ["Krugman", "AllenArkolakis", "PfluegerSuedekum"])
def test_records_are_stable_equilibria(ring_sweeps, name):
    m, d = ring_sweeps[name]
    assert np.all(d.X >= 0)
    np.testing.assert_allclose(d.X.sum(axis=1), 1.0, atol=1e-10)
    for r in d.records:
        assert r.verdict != "unstable"
        v = M.payoff(m.with_phi(r.phi), r.x)
        vstar = v[r.x > 1e-12].max()
        assert np.all(v <= vstar * (1 + 1e-6) + 1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("name", ["Krugman", "AllenArkolakis", "PfluegerSuedekum"])
def test_branches_are_continuous(ring_sweeps, name):
    _, d = ring_sweeps[name]
    R = d.records
    steps = [np.abs(b.x - a.x).max() for a, b in zip(R, R[1:]) if a.branch_id == b.branch_id]
    assert max(steps) < 0.1
    # every id change is backed by a jump flag
    assert all(b.jump for a, b in zip(R, R[1:]) if a.branch_id != b.branch_id)


@pytest.mark.slow
def test_fold_is_flagged():
    # the lopsided two-peak state folds into the symmetric one just past 0.54
    m = M.make_model("ps", geo.build_racetrack(8, 0.5), gamma=0.2)
    d = C.sweep(m)
    assert any(e.kind == "branch-jump" and 0.54 < e.phi < 0.56 for e in d.events)
