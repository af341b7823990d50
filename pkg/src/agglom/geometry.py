"""Proximity matrices for discrete geographies and the racetrack eigensystem.

The racetrack places ``n`` regions on a circle with ``phi_ij = phi**l_ij``,
``l_ij`` being the shorter arc distance.  Its row-normalized proximity matrix
is symmetric circulant, so the eigenvectors are discrete Fourier modes and
the eigenvalues have a closed form for even ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Kind = Literal["racetrack", "segment", "lattice-periodic", "lattice-bounded"]

BISECT_TOL = 1e-12
BISECT_MAXITER = 200


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ProximityMatrix:
    """Freeness-of-interaction matrix ``D = [phi_ij]``.

    ``shape`` is ``(n,)`` for one-dimensional geographies and ``(w, h)`` for
    lattices, with region ``i`` at column ``i % w`` and row ``i // w``.
    """

    n: int
    entries: np.ndarray
    kind: Kind
    phi: float
    shape: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _frozen(self.entries))
        if not self.shape:
            object.__setattr__(self, "shape", (self.n,))

    @property
    def topology(self) -> str:
        return {"racetrack": "circle", "segment": "segment"}.get(self.kind, "lattice")

    @property
    def is_circulant(self) -> bool:
        return self.kind == "racetrack"


@dataclass(frozen=True)
class NormalizedProximity:
    """Row-normalized proximity matrix ``Dbar``."""

    entries: np.ndarray
    source: ProximityMatrix
    symmetric_circulant: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _frozen(self.entries))


@dataclass(frozen=True)
class EigenSystem:
    """Distinct eigenvalues ``chis[k]`` of the racetrack ``Dbar`` and a basis.

    ``vectors`` lists ``z_0, z_1^+, z_1^-, ..., z_M`` (cosine member first for
    double eigenvalues) and ``modes[i]`` is the mode index of ``vectors[i]``.
    """

    n: int
    phi: float
    chis: np.ndarray
    vectors: tuple[np.ndarray, ...] = field(repr=False)
    modes: tuple[int, ...] = field(repr=False)
    multiplicities: tuple[int, ...] = ()

    @property
    def M(self) -> int:
        return len(self.chis) - 1

    def basis(self) -> np.ndarray:
        """Eigenvectors stacked as columns."""
        return np.column_stack(self.vectors)


def _check_phi(phi: float) -> float:
    phi = float(phi)
    if not 0.0 < phi < 1.0:
        raise ValueError(f"phi must lie in (0, 1), got {phi}")
    return phi


def ring_distance(n: int) -> np.ndarray:
    i = np.arange(n)
    d = np.abs(i[:, None] - i[None, :])
    return np.minimum(d, n - d)


def build_racetrack(n: int, phi: float) -> ProximityMatrix:
    if int(n) != n or n < 2:
        raise ValueError(f"racetrack needs n >= 2 regions, got {n}")
    phi = _check_phi(phi)
    return ProximityMatrix(int(n), phi ** ring_distance(int(n)), "racetrack", phi)


def build_segment(n: int, phi: float) -> ProximityMatrix:
    if int(n) != n or n < 2:
        raise ValueError(f"segment needs n >= 2 regions, got {n}")
    phi = _check_phi(phi)
    i = np.arange(int(n))
    return ProximityMatrix(int(n), phi ** np.abs(i[:, None] - i[None, :]), "segment", phi)


def build_lattice(w: int, h: int, phi: float, periodic: bool = False) -> ProximityMatrix:
    """Square lattice with Manhattan shortest-path distances."""
    if int(w) != w or int(h) != h or w < 2 or h < 2:
        raise ValueError(f"lattice dimensions must be >= 2, got {w}x{h}")
    phi = _check_phi(phi)
    w, h = int(w), int(h)
    cols = np.tile(np.arange(w), h)
    rows = np.repeat(np.arange(h), w)
    dx = np.abs(cols[:, None] - cols[None, :])
    dy = np.abs(rows[:, None] - rows[None, :])
    if periodic:
        dx = np.minimum(dx, w - dx)
        dy = np.minimum(dy, h - dy)
    kind: Kind = "lattice-periodic" if periodic else "lattice-bounded"
    return ProximityMatrix(w * h, phi ** (dx + dy), kind, phi, (w, h))


def rebuild(d: ProximityMatrix, phi: float) -> ProximityMatrix:
    """Same geography as ``d`` at a different freeness level."""
    if d.kind == "racetrack":
        return build_racetrack(d.n, phi)
    if d.kind == "segment":
        return build_segment(d.n, phi)
    w, h = d.shape
    return build_lattice(w, h, phi, periodic=d.kind == "lattice-periodic")


def neighbors(d: ProximityMatrix) -> list[list[int]]:
    """Adjacency lists of the geography (used for peak counting)."""
    return adjacency(d.topology, d.shape, periodic=d.kind != "lattice-bounded")


def adjacency(topology: str, shape: tuple[int, ...], periodic: bool = True) -> list[list[int]]:
    if topology in ("circle", "segment"):
        (n,) = shape
        if topology == "circle":
            return [sorted({(i - 1) % n, (i + 1) % n} - {i}) for i in range(n)]
        return [[j for j in (i - 1, i + 1) if 0 <= j < n] for i in range(n)]
    if topology != "lattice":
        raise ValueError(f"unknown topology {topology!r}")
    w, h = shape
    out = []
    for i in range(w * h):
        c, r = i % w, i // w
        nb = set()
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            cc, rr = c + dc, r + dr
            if periodic:
                cc, rr = cc % w, rr % h
            elif not (0 <= cc < w and 0 <= rr < h):
                continue
            j = rr * w + cc
            if j != i:
                nb.add(j)
        out.append(sorted(nb))
    return out


def row_normalize(d: ProximityMatrix) -> NormalizedProximity:
    e = d.entries
    return NormalizedProximity(e / e.sum(axis=1, keepdims=True), d, d.is_circulant)


def _psi(n: int, k: np.ndarray, phi: float) -> np.ndarray:
    theta = 2.0 * np.pi / n
    return (1.0 - phi**2) / (1.0 - 2.0 * phi * np.cos(theta * k) + phi**2)


def chi_lemma(n: int, k, phi: float) -> np.ndarray:
    """Closed-form eigenvalue of mode ``k`` for even ``n``."""
    if n % 2:
        raise ValueError(f"closed-form eigenvalues need even n, got {n}")
    k = np.asarray(k)
    M = n // 2
    psi_bar = (1.0 + phi**M) / (1.0 - phi**M)
    out = _psi(n, k, phi) * _psi(n, np.asarray(M), phi)
    return np.where(k % 2 == 1, out * psi_bar, out)


def chi_fourier(n: int, k, phi: float) -> np.ndarray:
    """Eigenvalue of mode ``k`` as the cosine transform of the first row."""
    k = np.asarray(k)
    row = phi ** ring_distance(n)[0]
    row = row / row.sum()
    j = np.arange(n)
    return np.cos(2.0 * np.pi / n * np.multiply.outer(k, j)) @ row


def chi(n: int, k, phi: float, method: str = "auto") -> np.ndarray:
    """Eigenvalue(s) ``chi_k(phi)`` of the racetrack ``Dbar``.

    ``method`` is ``"lemma"`` (closed form, even ``n``), ``"fourier"`` or
    ``"auto"`` (closed form when available).
    """
    if method == "lemma" or (method == "auto" and n % 2 == 0):
        return chi_lemma(n, k, phi)
    if method in ("auto", "fourier"):
        return chi_fourier(n, k, phi)
    raise ValueError(f"unknown method {method!r}")


def n_modes(n: int) -> int:
    """Largest mode index ``M``."""
    return n // 2


def racetrack_eigensystem(n: int, phi: float, method: str = "auto") -> EigenSystem:
    phi = _check_phi(phi)
    if n < 2:
        raise ValueError("n must be >= 2")
    M = n_modes(n)
    ks = np.arange(M + 1)
    chis = chi(n, ks, phi, method).astype(float)
    chis[0] = 1.0
    i = np.arange(n)
    theta = 2.0 * np.pi / n
    vecs: list[np.ndarray] = [np.full(n, 1.0 / np.sqrt(n))]
    modes = [0]
    mult = [1]
    for k in range(1, M + 1):
        if n % 2 == 0 and k == M:
            vecs.append((-1.0) ** i / np.sqrt(n))
            modes.append(k)
            mult.append(1)
            continue
        for v in (np.cos(theta * k * i), np.sin(theta * k * i)):
            vecs.append(v / np.linalg.norm(v))
            modes.append(k)
        mult.append(2)
    return EigenSystem(
        n, phi, _frozen(chis), tuple(_frozen(v) for v in vecs), tuple(modes), tuple(mult)
    )


def mode_vector(n: int, k: int, member: str = "cos") -> np.ndarray:
    """Unit basic migration pattern ``z_k`` (``member`` in cos, sin, both)."""
    i = np.arange(n)
    theta = 2.0 * np.pi / n * k
    if member == "cos":
        z = np.cos(theta * i)
    elif member == "sin":
        z = np.sin(theta * i)
    elif member == "both":
        z = np.cos(theta * i) + np.sin(theta * i)
    else:
        raise ValueError(f"unknown member {member!r}")
    norm = np.linalg.norm(z)
    if norm < 1e-12:
        raise ValueError(f"mode {k} has no {member} member for n={n}")
    return z / norm


def chi_inverse(n: int, k: int, chi_target: float, method: str = "auto") -> float:
    """Unique ``phi`` in (0, 1) with ``chi_k(phi) = chi_target``.

    Bisection exploits that ``chi_k`` falls strictly from 1 to 0 on (0, 1).
    """
    if not 0.0 < chi_target < 1.0:
        raise ValueError(f"chi_target must lie in (0, 1), got {chi_target}")
    if k < 1 or k > n_modes(n):
        raise ValueError(f"mode k must lie in 1..{n_modes(n)}, got {k}")
    lo, hi = 0.0, 1.0
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if float(chi(n, k, mid, method)) > chi_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < BISECT_TOL:
            break
    return 0.5 * (lo + hi)


def phi_from_chi_M(chi_target: float) -> float:
    """Closed-form inverse of ``chi_M = ((1-phi)/(1+phi))**2``."""
    s = np.sqrt(chi_target)
    return float((1.0 - s) / (1.0 + s))
