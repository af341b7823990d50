"""Atomic CSV/JSON writers and the documented table schemas."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .continuation import BifurcationDiagram
from .spectral import SpectralReport


def _atomic_write(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj) -> Path:
    return _atomic_write(path, dumps(obj))


def table_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence], fmt: str = "csv") -> Path:
    rows = [list(r) for r in rows]
    if fmt == "json":
        return write_json(path, [dict(zip(header, r)) for r in rows])
    return _atomic_write(path, table_text(header, rows))


def read_table(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def config_hash(config: dict) -> str:
    blob = json.dumps(_plain(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:10]


def output_name(model: str, analysis: str, config: dict, ext: str) -> str:
    return f"{model}_{analysis}_{config_hash(config)}.{ext}"


# schemas ------------------------------------------------------------------


def matrix_rows(a: np.ndarray):
    header = [f"j{j}" for j in range(a.shape[1])]
    return header, a.tolist()


def omega_rows(rep: SpectralReport):
    M = rep.omegas.shape[1]
    header = ["phi"] + [f"omega_{k}" for k in range(1, M + 1)]
    return header, [[p, *row] for p, row in zip(rep.phi, rep.omegas)]


def sweep_rows(d: BifurcationDiagram):
    n = len(d.records[0].x) if d.records else 0
    header = ["phi"] + [f"x_{i}" for i in range(n)] + ["stable", "peaks", "branch_id"]
    rows = [
        [r.phi, *r.x.tolist(), int(r.verdict != "unstable"), r.peaks, r.branch_id]
        for r in d.records
    ]
    return header, rows


def trajectory_rows(t: np.ndarray, X: np.ndarray):
    header = ["t"] + [f"x_{i + 1}" for i in range(X.shape[1])]
    return header, [[ti, *xi] for ti, xi in zip(t.tolist(), X.tolist())]


def sensitivity_rows(phi: np.ndarray, rho: np.ndarray, drho: np.ndarray):
    return ["phi", "rho", "rho_prime_estimate"], [list(r) for r in zip(phi, rho, drho)]
