"""Stable patterns beyond the racetrack: a 65-region segment and a 9x9 lattice."""

import argparse
from pathlib import Path

import numpy as np

from agglom import continuation, dynamics, geometry, models, outputs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/patterns")
    args = ap.parse_args()
    out = Path(args.out)

    seg = models.make_model("HelpmanPL", geometry.build_segment(65, 0.9))
    d = continuation.sweep(seg, np.linspace(0.2, 0.9, 15), "down")
    outputs.write_table(out / "HelpmanPL_segment65.csv", *outputs.sweep_rows(d))
    for r in sorted(d.records, key=lambda r: r.phi):
        print(f"segment phi={r.phi:.2f} peaks={r.peaks} top share={r.x.max():.3f} {r.verdict}")

    rows = []
    for phi in (0.05, 0.1, 0.2, 0.3, 0.5, 0.7):
        m = models.make_model("Krugman", geometry.build_lattice(9, 9, phi))
        rp = dynamics.integrate_to_rest(m, np.full(81, 1 / 81))
        peaks = continuation.peaks_for(m, rp.x)
        rows.append([phi, *rp.x.tolist(), int(rp.verdict != "unstable"), peaks])
        print(f"lattice phi={phi:.2f} peaks={peaks} {rp.verdict}")
    header = ["phi"] + [f"x_{i}" for i in range(81)] + ["stable", "peaks"]
    outputs.write_table(out / "Krugman_lattice9x9.csv", header, rows)


if __name__ == "__main__":
    main()
