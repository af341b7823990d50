"""Catalogue-wide analytic-versus-numeric checks.

Besides the per-model cross-validation this reports two known anomalies:
the Allen-Arkolakis constant term as printed with the opposite sign, and the
Pflueger-Suedekum parameter set whose quadratic net gain has a negative
discriminant (no Class III behaviour).
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import geometry as geo
from .models import MODELS, RationalGain, gain_function, make_model
from .spectral import classify, cross_validate, mode_eigenvalues, numeric_elasticity, quadratic_conditions

DEFAULT_GRID = np.linspace(0.05, 0.95, 20)
PS_FIGURE_PARAMS = {"mu": 0.4, "sigma": 2.5, "L": 4.0, "gamma": 0.5}


def printed_aa_gain(alpha: float, beta: float, sigma: float) -> RationalGain:
    """The Allen-Arkolakis net gain with the constant term as printed."""
    ab = alpha + beta
    c0 = -(ab - (1.0 + alpha) / sigma)
    c1 = ab + (1.0 - beta) / sigma
    return RationalGain((c0, c1), (sigma, sigma - 1.0), scale=sigma)


def aa_sign_anomaly(n: int = 8, phi_grid: Sequence[float] = DEFAULT_GRID, **params) -> dict:
    m = make_model("AllenArkolakis", geo.build_racetrack(n, 0.5), **params)
    p = m.params
    printed = printed_aa_gain(p.alpha, p.beta, p.sigma)
    corrected = gain_function(m)
    bad_printed = bad_corrected = 0
    for phi in phi_grid:
        mp = m.with_phi(float(phi))
        es = geo.racetrack_eigensystem(n, float(phi))
        num = mode_eigenvalues(numeric_elasticity(mp), es)
        chis = np.array([es.chis[k] for k in es.modes[1:]])
        bad_printed += int(np.sum(np.sign(printed(chis)) != np.sign(num)))
        bad_corrected += int(np.sum(np.sign(corrected(chis)) != np.sign(num)))
    return {
        "anomaly": "AllenArkolakis constant term",
        "printed_c0": printed.num[0],
        "corrected_c0": corrected.num[0],
        "printed_class": classify(printed).cls,
        "corrected_class": classify(corrected).cls,
        "sign_mismatches_printed": bad_printed,
        "sign_mismatches_corrected": bad_corrected,
        "verdict": "corrected form confirmed" if bad_corrected == 0 and bad_printed > 0 else "inconclusive",
    }


def ps_discriminant_anomaly(params: Optional[dict] = None) -> dict:
    params = dict(PS_FIGURE_PARAMS if params is None else params)
    m = make_model("PfluegerSuedekum", geo.build_racetrack(8, 0.5), **params)
    g = gain_function(m)
    c0, c1, c2 = g.num
    cond = quadratic_conditions(c0, c1, c2)
    return {
        "anomaly": "PfluegerSuedekum figure parameters",
        "params": params,
        "coefficients": [c0, c1, c2],
        "discriminant": cond["discriminant"],
        "class": classify(g).cls,
        "class_III_conditions_hold": bool(cond["III"]),
    }


def validate_catalog(n: int = 8, phi_grid: Sequence[float] = DEFAULT_GRID) -> dict:
    rows = []
    for name in MODELS:
        m = make_model(name, geo.build_racetrack(n, 0.5))
        cv = cross_validate(m, phi_grid)
        rows.append(
            {
                "model": name,
                "params": m.params.as_dict(),
                "sign_mismatches": cv.sign_mismatches,
                "max_ratio_spread": cv.max_spread,
                "declared_scale": cv.scale,
                "mean_ratio": float(np.mean(cv.ratios)),
                "max_circulant_defect": cv.max_circulant_defect,
                "ok": cv.ok,
            }
        )
    return {
        "n": n,
        "phi_grid": list(map(float, phi_grid)),
        "models": rows,
        "sign_mismatches": int(sum(r["sign_mismatches"] for r in rows)),
        "all_ok": all(r["ok"] for r in rows),
        "anomalies": [aa_sign_anomaly(n, phi_grid), ps_discriminant_anomaly()],
    }
