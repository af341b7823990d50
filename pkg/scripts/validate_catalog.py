"""Analytic mode gains against finite-difference elasticities for every model."""

import argparse
from pathlib import Path

from agglom import outputs, validation


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/validation.json")
    ap.add_argument("--N", type=int, default=8)
    args = ap.parse_args()
    rep = validation.validate_catalog(args.N)
    outputs.write_json(Path(args.out), rep)
    for r in rep["models"]:
        print(f"{r['model']:18s} mismatches {r['sign_mismatches']} spread {r['max_ratio_spread']:.1e} ok={r['ok']}")
    for a in rep["anomalies"]:
        print("anomaly:", a["anomaly"], "->", a.get("verdict", a.get("class")))
    raise SystemExit(0 if rep["all_ok"] else 1)


if __name__ == "__main__":
    main()
