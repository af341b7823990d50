"""Bifurcation sweeps on the 8-region racetrack for the three reference models.

Writes one CSV (phi, x_0..x_7, stable, peaks, branch_id) and one events JSON
per run into --out. Pflueger-Suedekum runs twice: gamma = 0.2 puts it in
class III, gamma = 0.5 leaves the uniform state stable everywhere.
"""

import argparse
import time
from pathlib import Path

from agglom import continuation, geometry, models, outputs

RUNS = {
    "Krugman": ("Krugman", {}, "up"),
    "AllenArkolakis": ("AllenArkolakis", {}, "down"),
    "PfluegerSuedekum": ("PfluegerSuedekum", {"gamma": 0.2}, "up"),
    "PfluegerSuedekum_g05": ("PfluegerSuedekum", {"gamma": 0.5}, "up"),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/sweeps")
    ap.add_argument("--N", type=int, default=8)
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()
    out = Path(args.out)
    grid = continuation.default_grid(args.steps)
    for name, (model, params, direction) in RUNS.items():
        m = models.make_model(model, geometry.build_racetrack(args.N, 0.5), **params)
        t0 = time.perf_counter()
        d = continuation.sweep(m, grid, direction)
        dt = time.perf_counter() - t0
        outputs.write_table(out / f"{name}_sweep.csv", *outputs.sweep_rows(d))
        outputs.write_json(out / f"{name}_events.json", [e.as_dict() for e in d.events])
        seq = d.peak_sequence() or "uniform throughout"
        print(f"{name:22s} class {d.cls:12s} {direction:4s} peaks {seq} ({dt:.1f}s)")


if __name__ == "__main__":
    main()
