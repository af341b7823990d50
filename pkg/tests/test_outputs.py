import json

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from agglom import outputs as O
from agglom.spectral import SpectralReport


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=8))
def test_csv_float_roundtrip(vals):
    text = O.table_text(["v"], [[v] for v in vals])
    back = [float(line) for line in text.splitlines()[1:]]
    assert back == vals


def test_write_table_and_read(tmp_path):
    p = O.write_table(tmp_path / "sub" / "t.csv", ["a", "b"], [[0.1, 2], [np.float64(1 / 3), 4]])
    header, rows = O.read_table(p)
    assert header == ["a", "b"]
    assert float(rows[1][0]) == 1 / 3
    assert not list((tmp_path / "sub").glob(".*tmp"))


def test_json_table(tmp_path):
    p = O.write_table(tmp_path / "t.json", ["a"], [[1.5]], fmt="json")
    assert json.loads(p.read_text()) == [{"a": 1.5}]


def test_dumps_numpy_types():
    out = json.loads(O.dumps({"a": np.arange(2), "b": np.float32(0.5), "c": np.bool_(True), "d": 1 + 2j}))
    assert out == {"a": [0, 1], "b": 0.5, "c": True, "d": [1.0, 2.0]}


def test_config_hash_stable_and_order_free():
    a = O.config_hash({"x": 1, "y": [1, 2]})
    assert a == O.config_hash({"y": [1, 2], "x": 1})
    assert a != O.config_hash({"x": 2, "y": [1, 2]})
    assert O.output_name("Krugman", "sweep", {"x": 1}, "csv").startswith("Krugman_sweep_")


def test_omega_schema():
    rep = SpectralReport(np.array([0.1, 0.2]), np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([2, 2]))
    header, rows = O.omega_rows(rep)
    assert header == ["phi", "omega_1", "omega_2"]
    assert rows[1] == [0.2, 3.0, 4.0]


def test_trajectory_and_sensitivity_schema():
    h, rows = O.trajectory_rows(np.array([0.0, 1.0]), np.eye(2))
    assert h == ["t", "x_1", "x_2"] and rows[1] == [1.0, 0.0, 1.0]
    h, rows = O.sensitivity_rows(np.array([0.1]), np.array([2.0]), np.array([3.0]))
    assert h == ["phi", "rho", "rho_prime_estimate"]
