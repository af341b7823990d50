"""Spectral stability and continuation for multi-region spatial economies.

Regions sit on a racetrack, a segment or a lattice; a proximity matrix built
from the freeness of trade ``phi`` couples them.  Each model maps a population
distribution to payoffs.  The net gain of the uniform state along each Fourier
mode decides its stability, and :mod:`agglom.continuation` follows the stable
branch beyond it.
"""

from .geometry import build_lattice, build_racetrack, build_segment, chi
from .models import MODELS, make_model, payoff, gain_function, gn_function
from .spectral import break_points, classify
from .dynamics import integrate_to_rest
from .continuation import sweep
from .sensitivity import rho_and_sign

__version__ = "0.1.0"

__all__ = [
    "MODELS",
    "break_points",
    "build_lattice",
    "build_racetrack",
    "build_segment",
    "chi",
    "classify",
    "gain_function",
    "gn_function",
    "integrate_to_rest",
    "make_model",
    "payoff",
    "rho_and_sign",
    "sweep",
]
