"""Command-line front end.

Every command resolves one configuration from an optional JSON file plus
flags (flags win), validates it, runs the analysis and writes
``<model>_<analysis>_<hash>.<ext>`` into the output directory.  ``AGGLOM_OUT``
overrides ``--out``.  Exit codes: 0 success, 1 analysis failure or failed
validation suite, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import continuation, dynamics, geometry, models, outputs, sensitivity, spectral, validation

PARAM_NAMES = ("mu", "sigma", "gamma", "alpha", "beta", "L", "tau", "eta")
CONFIG_KEYS = {"model", "params", "geometry", "analysis", "out", "format"}
GEOMETRY_KEYS = {"kind", "N", "W", "H", "periodic", "phi", "phi_min", "phi_max", "phi_steps"}
ANALYSIS_KEYS = {
    "direction",
    "member",
    "characteristic",
    "mode",
    "amplitude",
    "oracle",
    "t_max",
    "trajectory",
}
COMMANDS = ("classify", "break-points", "omega", "sweep", "simulate", "sensitivity", "validate")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    model: str = "Krugman"
    params: dict = field(default_factory=dict)
    geometry: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)
    out: str = "."
    format: str = "csv"

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "params": self.params,
            "geometry": self.geometry,
            "analysis": self.analysis,
            "format": self.format,
        }


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--model")
    common.add_argument("--N", type=int, dest="N")
    common.add_argument("--W", type=int, dest="W", help="lattice width")
    common.add_argument("--H", type=int, dest="H", help="lattice height")
    common.add_argument("--periodic", action="store_true", default=None)
    common.add_argument("--geometry", choices=["racetrack", "segment", "lattice"])
    common.add_argument("--phi", type=float)
    common.add_argument("--phi-min", type=float, dest="phi_min")
    common.add_argument("--phi-max", type=float, dest="phi_max")
    common.add_argument("--phi-steps", type=int, dest="phi_steps")
    for name in PARAM_NAMES:
        common.add_argument(f"--{name}", type=float)
    common.add_argument("--out")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--direction", choices=["up", "down"])
    common.add_argument("--member", choices=["cos", "sin", "both"])
    common.add_argument("--characteristic", choices=list(models.CHARACTERISTICS))
    common.add_argument("--mode", type=int, help="mode of the initial perturbation")
    common.add_argument("--amplitude", type=float, help="size of the initial perturbation")
    common.add_argument("--oracle", type=int, help="stable phi points checked by brute force")
    common.add_argument("--t-max", type=float, dest="t_max")
    common.add_argument("--trajectory", action="store_true", default=None)
    p = argparse.ArgumentParser(prog="agglom", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sub.add_parser(cmd, parents=[common])
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(
        model=raw.get("model", "Krugman"),
        params=dict(raw.get("params", {})),
        geometry=dict(raw.get("geometry", {})),
        analysis=dict(raw.get("analysis", {})),
        out=raw.get("out", "."),
        format=raw.get("format", "csv"),
    )
    for key, allowed in (("params", set(PARAM_NAMES)), ("geometry", GEOMETRY_KEYS), ("analysis", ANALYSIS_KEYS)):
        bad = set(getattr(cfg, key)) - allowed
        if bad:
            raise ConfigError(f"unknown {key} keys: {sorted(bad)}")
    if args.model:
        cfg.model = args.model
    for name in PARAM_NAMES:
        val = getattr(args, name)
        if val is not None:
            cfg.params[name] = val
    if args.geometry:
        cfg.geometry["kind"] = args.geometry
    for key in ("N", "W", "H", "periodic", "phi", "phi_min", "phi_max", "phi_steps"):
        val = getattr(args, key)
        if val is not None:
            cfg.geometry[key] = val
    for key in ANALYSIS_KEYS:
        val = getattr(args, key)
        if val is not None:
            cfg.analysis[key] = val
    if args.out:
        cfg.out = args.out
    if os.environ.get("AGGLOM_OUT"):
        cfg.out = os.environ["AGGLOM_OUT"]
    if args.format:
        cfg.format = args.format
    try:
        cfg.model = models.canonical_name(cfg.model)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.format not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    return cfg


def _grid(cfg: ExperimentConfig) -> np.ndarray:
    g = cfg.geometry
    if "phi_min" in g or "phi_max" in g or "phi_steps" in g:
        lo, hi = g.get("phi_min", 0.005), g.get("phi_max", 0.995)
        steps = int(g.get("phi_steps", 200))
        if not (0 < lo < hi < 1) or steps < 2:
            raise ConfigError("need 0 < phi_min < phi_max < 1 and phi_steps >= 2")
        return continuation.default_grid(steps, lo, hi)
    if "phi" in g:
        return np.array([float(g["phi"])])
    return continuation.default_grid()


def _geometry(cfg: ExperimentConfig, phi: float) -> geometry.ProximityMatrix:
    g = cfg.geometry
    kind = g.get("kind", "racetrack")
    try:
        if kind == "racetrack":
            return geometry.build_racetrack(int(g.get("N", 8)), phi)
        if kind == "segment":
            return geometry.build_segment(int(g.get("N", 8)), phi)
        if kind == "lattice":
            return geometry.build_lattice(int(g.get("W", 9)), int(g.get("H", 9)), phi, bool(g.get("periodic", False)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown geometry kind {kind!r}")


def _model(cfg: ExperimentConfig, phi: Optional[float] = None) -> models.ModelInstance:
    phi = float(cfg.geometry.get("phi", 0.5)) if phi is None else phi
    try:
        return models.make_model(cfg.model, _geometry(cfg, phi), **cfg.params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _require_racetrack(cfg: ExperimentConfig, what: str) -> None:
    if cfg.geometry.get("kind", "racetrack") != "racetrack":
        raise ConfigError(f"{what} needs the racetrack geometry")


def _emit(cfg: ExperimentConfig, analysis: str, header, rows) -> Path:
    ext = "json" if cfg.format == "json" else "csv"
    path = Path(cfg.out) / outputs.output_name(cfg.model, analysis, cfg.as_dict(), ext)
    return outputs.write_table(path, header, rows, cfg.format)


def _emit_json(cfg: ExperimentConfig, analysis: str, obj) -> Path:
    path = Path(cfg.out) / outputs.output_name(cfg.model, analysis, cfg.as_dict(), "json")
    return outputs.write_json(path, obj)


def cmd_classify(cfg: ExperimentConfig) -> dict:
    m = _model(cfg)
    g = models.gain_function(m)
    out = {"model": cfg.model, "params": m.params.as_dict(), **spectral.classify(g).as_dict()}
    out["num"] = list(g.num)
    out["den"] = list(g.den)
    out["file"] = str(_emit_json(cfg, "classify", out))
    return out


def cmd_break(cfg: ExperimentConfig) -> dict:
    _require_racetrack(cfg, "break-points")
    m = _model(cfg)
    bp = spectral.break_points(m)
    out = {"model": cfg.model, "N": m.n, **bp.as_dict(m.n)}
    out["file"] = str(_emit_json(cfg, "break-points", out))
    return out


def cmd_omega(cfg: ExperimentConfig) -> dict:
    _require_racetrack(cfg, "omega")
    grid = _grid(cfg)
    m = _model(cfg, float(grid[0]))
    rep = spectral.omega_curves(m, m.n, grid)
    path = _emit(cfg, "omega", *outputs.omega_rows(rep))
    return {"model": cfg.model, "rows": len(grid), "stable_ranges": rep.stable_ranges, "file": str(path)}


def cmd_sweep(cfg: ExperimentConfig) -> dict:
    grid = _grid(cfg)
    m = _model(cfg, float(grid[0]))
    opts = continuation.SweepOptions(member=cfg.analysis.get("member", "cos"))
    d = continuation.sweep(m, grid, cfg.analysis.get("direction"), options=opts)
    path = _emit(cfg, "sweep", *outputs.sweep_rows(d))
    events = [e.as_dict() for e in d.events]
    epath = _emit_json(cfg, "sweep-events", events)
    return {
        "model": cfg.model,
        "class": d.cls,
        "direction": d.direction,
        "peak_sequence": d.peak_sequence(),
        "events": events,
        "file": str(path),
        "events_file": str(epath),
    }


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    m = _model(cfg)
    n = m.n
    k = int(cfg.analysis.get("mode", 1))
    amp = float(cfg.analysis.get("amplitude", 1e-3))
    if m.geometry.kind == "racetrack":
        if not 1 <= k <= n // 2:
            raise ConfigError(f"mode must lie in 1..{n // 2}")
        dirn = geometry.mode_vector(n, k, cfg.analysis.get("member", "cos"))
    else:
        dirn = np.cos(2 * np.pi * k * np.arange(n) / n)
        dirn -= dirn.mean()
    x0 = np.full(n, 1.0 / n) + amp * dirn / n
    opts = dynamics.IntegrateOptions(t_max=float(cfg.analysis.get("t_max", 1e6)), record=True)
    rp = dynamics.integrate_to_rest(m, x0, opts)
    t, X = rp.trajectory
    path = _emit(cfg, "trajectory", *outputs.trajectory_rows(t, X))
    summary = {
        "model": cfg.model,
        "x": rp.x,
        "verdict": rp.verdict,
        "converged": rp.converged,
        "velocity": rp.velocity,
        "payoff_spread": rp.payoff_spread,
        "peaks": continuation.peaks_for(m, rp.x),
        "jacobian_eigs_real": np.real(rp.jacobian_eigs),
        "file": str(path),
    }
    summary["summary_file"] = str(_emit_json(cfg, "simulate", summary))
    return summary


def cmd_sensitivity(cfg: ExperimentConfig) -> dict:
    _require_racetrack(cfg, "sensitivity")
    grid = _grid(cfg)
    m = _model(cfg, float(grid[0]))
    ch = cfg.analysis.get("characteristic", "amenity")
    try:
        models.gn_function(m, ch)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rep = sensitivity.rho_and_sign(m, ch, None, grid)
    path = _emit(cfg, "sensitivity", *outputs.sensitivity_rows(rep.phi, rep.rho, rep.rho_prime))
    oracle = []
    n_oracle = int(cfg.analysis.get("oracle", 0))
    if n_oracle and len(rep.phi):
        for phi in rep.phi[np.linspace(0, len(rep.phi) - 1, n_oracle).astype(int)]:
            mp = m.with_phi(float(phi))
            X = sensitivity.brute_force_dx_da(mp, ch)
            es = geometry.racetrack_eigensystem(m.n, float(phi))
            bf = sensitivity.project_modes(X, es)
            an = sensitivity.model_lambdas(mp, ch)
            oracle.append({"phi": float(phi), "max_rel_err": float(np.max(np.abs(bf[1:] / an[1:] - 1)))})
    report = {
        "model": cfg.model,
        "characteristic": ch,
        "phi": rep.phi,
        "lambdas": rep.lambdas,
        "rho_prime_sign_predicted": rep.rho_prime_sign,
        "rho_prime_sign_observed": rep.observed_sign,
        "excluded_phi": list(rep.excluded),
        "oracle": oracle,
        "file": str(path),
    }
    report["report_file"] = str(_emit_json(cfg, "sensitivity-report", report))
    return report


def cmd_validate(cfg: ExperimentConfig) -> dict:
    n = int(cfg.geometry.get("N", 8))
    grid = validation.DEFAULT_GRID
    if "phi_steps" in cfg.geometry or "phi_min" in cfg.geometry or "phi_max" in cfg.geometry:
        grid = _grid(cfg)
    report = validation.validate_catalog(n, grid)
    path = Path(cfg.out) / outputs.output_name("catalog", "validate", cfg.as_dict(), "json")
    report["file"] = str(outputs.write_json(path, report))
    return report


DISPATCH = {
    "classify": cmd_classify,
    "break-points": cmd_break,
    "omega": cmd_omega,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "sensitivity": cmd_sensitivity,
    "validate": cmd_validate,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        result = DISPATCH[args.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(outputs.dumps({"error": str(exc), "type": "validation"}))
        return 2
    except (RuntimeError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(outputs.dumps({"error": str(exc), "type": type(exc).__name__}))
        return 1
    sys.stdout.write(outputs.dumps(result))
    if args.command == "validate" and not result["all_ok"]:
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
