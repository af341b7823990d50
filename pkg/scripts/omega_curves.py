"""Mode gains omega_k(phi) for every catalogued model, plus the class table."""

import argparse
from pathlib import Path

from agglom import continuation, geometry, models, outputs, spectral


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/omega")
    ap.add_argument("--N", type=int, default=8)
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()
    out = Path(args.out)
    grid = continuation.default_grid(args.steps)
    table = []
    for name in models.MODELS:
        m = models.make_model(name, geometry.build_racetrack(args.N, 0.5))
        rep = spectral.omega_curves(m, args.N, grid)
        outputs.write_table(out / f"{name}_omega.csv", *outputs.omega_rows(rep))
        bp = spectral.break_points(m).as_dict(args.N)
        table.append({"model": name, "params": m.params.as_dict(), **bp, "stable_ranges": rep.stable_ranges})
        print(f"{name:18s} {bp['class']:13s} " + " ".join(f"{k}={v:.6g}" for k, v in bp.items() if k.startswith("phi")))
    outputs.write_json(out / "classes.json", table)


if __name__ == "__main__":
    main()
