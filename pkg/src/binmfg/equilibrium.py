"""Enumeration and classification of mean field equilibria.

An equilibrium is a zero of :func:`binmfg.core.consistency_F` on ``[-1, 1]``.
The residual is smooth on each of the four pieces cut by ``-eps, 0, eps``
and has at most two zeros per piece, so a fine bracketing grid plus a local
check for double roots is exhaustive.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import ModelParams, consistency_F, consistency_F_raw

log = logging.getLogger(__name__)

T_MIN = 1e-9
T_MAX = 1e6

# root accepted when the residual is this small at a grid point
EXACT_ZERO = 1e-14
# local minima of |F| below this are refined for hidden roots
TANGENCY_SCREEN = 1e-3


class NearTangencyWarning(UserWarning):
    """A piece of the residual comes within ``10 * tol`` of zero without a root."""


class EquilibriumClass(str, enum.Enum):
    POLARIZED_COHERENT = "PolarizedCoherent"
    POLARIZED_INCOHERENT = "PolarizedIncoherent"
    UNPOLARIZED_COHERENT = "UnpolarizedCoherent"
    UNPOLARIZED_INCOHERENT = "UnpolarizedIncoherent"

    @property
    def polarized(self) -> bool:
        return self in (EquilibriumClass.POLARIZED_COHERENT, EquilibriumClass.POLARIZED_INCOHERENT)

    @property
    def coherent(self) -> bool:
        return self in (EquilibriumClass.POLARIZED_COHERENT, EquilibriumClass.UNPOLARIZED_COHERENT)

    def swapped(self) -> "EquilibriumClass":
        return _SWAP[self]


_SWAP = {
    EquilibriumClass.POLARIZED_COHERENT: EquilibriumClass.POLARIZED_INCOHERENT,
    EquilibriumClass.POLARIZED_INCOHERENT: EquilibriumClass.POLARIZED_COHERENT,
    EquilibriumClass.UNPOLARIZED_COHERENT: EquilibriumClass.UNPOLARIZED_INCOHERENT,
    EquilibriumClass.UNPOLARIZED_INCOHERENT: EquilibriumClass.UNPOLARIZED_COHERENT,
}

CLASS_ORDER = (
    EquilibriumClass.POLARIZED_COHERENT,
    EquilibriumClass.POLARIZED_INCOHERENT,
    EquilibriumClass.UNPOLARIZED_COHERENT,
    EquilibriumClass.UNPOLARIZED_INCOHERENT,
)

# region -> (PC, PI, UC, UI) counts
REGIONS: dict[int, tuple[int, int, int, int]] = {
    1: (1, 1, 0, 1),
    2: (1, 1, 2, 1),
    3: (1, 2, 2, 0),
    4: (2, 2, 1, 0),
    5: (1, 2, 0, 0),
    6: (1, 0, 0, 0),
    7: (1, 0, 2, 0),
    8: (2, 0, 1, 0),
    9: (0, 0, 1, 0),
}
_REGION_OF = {v: k for k, v in REGIONS.items()}


@dataclass(frozen=True)
class Equilibrium:
    m: float
    cls: EquilibriumClass
    tangent: bool = False


@dataclass(frozen=True)
class PhaseSignature:
    counts: tuple[int, int, int, int]
    region_id: int | None = None
    tangent: bool = False

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def empty(self) -> bool:
        return self.total == 0


def classify(m: float, p: ModelParams) -> EquilibriumClass:
    """Polarization/coherence class; boundaries follow ``(0, eps]`` and ``[-eps, 0]``."""
    if abs(m) > 1 + 1e-12:
        raise ValueError(f"|m| must not exceed 1, got {m}")
    if p.m0 < 0:
        # coherence is relative to sign(m0), so the mirror image keeps its label
        return classify(-m, p.with_m0(-p.m0))
    eps = p.eps
    if m > eps:
        return EquilibriumClass.POLARIZED_COHERENT
    if m < -eps:
        return EquilibriumClass.POLARIZED_INCOHERENT
    if m > 0:
        return EquilibriumClass.UNPOLARIZED_COHERENT
    return EquilibriumClass.UNPOLARIZED_INCOHERENT


def clamp_horizon(T: float) -> float:
    if T < T_MIN or T > T_MAX:
        Tc = min(max(T, T_MIN), T_MAX)
        log.warning("horizon %g clamped to %g", T, Tc)
        return Tc
    return T


def _breakpoints(eps: float) -> list[float]:
    pts = sorted({-1.0, -eps, 0.0, eps, 1.0})
    return [x for x in pts if -1.0 <= x <= 1.0]


def _roots_on_piece(f, a, b, n, tol, tangent_out, warn_out):
    grid = np.linspace(a, b, n)
    vals = f(grid)
    roots = []
    zero = np.abs(vals) <= EXACT_ZERO
    roots.extend(grid[zero].tolist())
    s = np.sign(vals)
    cross = np.nonzero(s[:-1] * s[1:] < 0)[0]
    for i in cross:
        roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))

    # interior local minima of |F| with no sign change on either side
    av = np.abs(vals)
    i = np.arange(1, n - 1)
    cand = i[
        (av[i] <= av[i - 1])
        & (av[i] <= av[i + 1])
        & (av[i] < TANGENCY_SCREEN)
        & (s[i - 1] == s[i])
        & (s[i + 1] == s[i])
        & (s[i] != 0)
    ]
    for j in cand:
        sg = s[j]
        lo, hi = grid[j - 1], grid[j + 1]
        res = minimize_scalar(lambda x: sg * f(x), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        xm, fm = float(res.x), float(sg * res.fun)
        if np.sign(fm) == -sg:
            roots.append(brentq(f, lo, xm, xtol=1e-15))
            roots.append(brentq(f, xm, hi, xtol=1e-15))
        elif abs(fm) <= tol:
            roots.append(xm)
            tangent_out.append(xm)
        elif abs(fm) <= 10 * tol:
            warn_out.append((a, b, xm, fm))
    return roots


def _dedupe(roots: list[float], tangents: list[float], sep: float = 1e-9):
    roots = sorted(roots)
    out: list[tuple[float, bool]] = []
    for r in roots:
        is_t = any(abs(r - t) <= sep for t in tangents)
        if out and abs(r - out[-1][0]) <= sep:
            out[-1] = (out[-1][0], out[-1][1] or is_t)
        else:
            out.append((r, is_t))
    return out


def find_equilibria(p: ModelParams, grid_points: int = 10_000, tol: float = 1e-8) -> list[Equilibrium]:
    """All solutions of the consistency equation, sorted by ``m``.

    Each sign-regular piece of ``[-1, 1]`` is scanned on ``grid_points``
    nodes; sign changes are refined by Brent's method and local minima of
    ``|F|`` are checked for double roots (reported once, ``tangent=True``).
    Minima within ``10 * tol`` of zero that are not roots raise a
    :class:`NearTangencyWarning`.
    """
    if grid_points < 1000:
        raise ValueError("grid_points must be at least 1000")
    if tol <= 0:
        raise ValueError("tol must be positive")
    T = clamp_horizon(p.T)
    if p.m0 < 0:
        mirrored = find_equilibria(ModelParams(T, p.eps, -p.m0), grid_points, tol)
        return [Equilibrium(-e.m, e.cls, e.tangent) for e in reversed(mirrored)]

    q = ModelParams(T, p.eps, p.m0)

    def f(m):
        return consistency_F(m, q)

    tangents: list[float] = []
    near: list[tuple] = []
    roots: list[float] = []
    bps = _breakpoints(q.eps)
    for a, b in zip(bps[:-1], bps[1:]):
        roots.extend(_roots_on_piece(f, a, b, grid_points, tol, tangents, near))
    for a, b, xm, fm in near:
        warnings.warn(
            f"near-tangency on [{a:.6g}, {b:.6g}]: min |F| = {abs(fm):.3g} at m = {xm:.12g} "
            f"(T={q.T}, eps={q.eps}, m0={q.m0})",
            NearTangencyWarning,
            stacklevel=2,
        )
    return [Equilibrium(r, classify(r, q), t) for r, t in _dedupe(roots, tangents)]


def brute_force_roots(p: ModelParams, resolution: int = 1_000_000) -> list[float]:
    """Test oracle: roots of the residual read off a uniform grid on ``[-1, 1]``.

    Sign-change cells are located by linear interpolation inside the cell;
    grid minima of ``|F|`` below ``sqrt(machine eps)`` are added as touching
    roots.
    """
    if resolution < 100_000:
        raise ValueError("resolution must be at least 1e5")
    T = min(max(p.T, T_MIN), T_MAX)
    m = np.linspace(-1.0, 1.0, resolution + 1)
    f = consistency_F_raw(m, T, p.eps, p.m0)
    out = []
    s = np.sign(f)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    out.extend((m[idx] - f[idx] * (m[idx + 1] - m[idx]) / (f[idx + 1] - f[idx])).tolist())
    out.extend(m[f == 0].tolist())
    af = np.abs(f)
    i = np.arange(1, resolution)
    touch = i[(af[i] <= af[i - 1]) & (af[i] <= af[i + 1]) & (af[i] < np.sqrt(np.finfo(float).eps))
              & (s[i - 1] == s[i + 1]) & (f[i] != 0)]
    out.extend(m[touch].tolist())
    out.sort()
    merged: list[float] = []
    for r in out:
        if not merged or r - merged[-1] > 4.0 / resolution:
            merged.append(r)
    return merged


def region_of(counts: tuple[int, int, int, int]) -> int | None:
    return _REGION_OF.get(tuple(counts))


def signature_from(eqs: list[Equilibrium]) -> PhaseSignature:
    counts = tuple(sum(1 for e in eqs if e.cls is c) for c in CLASS_ORDER)
    tangent = any(e.tangent for e in eqs)
    rid = None if tangent else region_of(counts)
    return PhaseSignature(counts, rid, tangent)


def region_signature(p: ModelParams, grid_points: int = 10_000) -> PhaseSignature:
    sig = signature_from(find_equilibria(p, grid_points))
    if sig.empty:
        log.warning("no equilibrium found at %s", p)
    return sig


@dataclass
class PhaseGrid:
    """Signature counts on an ``(eps, T)`` grid plus the analytic curves."""

    m0: float
    eps: np.ndarray
    T: np.ndarray
    counts: np.ndarray  # shape (len(T), len(eps), 4)
    curves: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def region_ids(self) -> np.ndarray:
        out = np.zeros(self.counts.shape[:2], dtype=int)
        for rid, c in REGIONS.items():
            out[np.all(self.counts == np.array(c), axis=-1)] = rid
        return out

    def distinct_signatures(self) -> set[tuple[int, int, int, int]]:
        flat = self.counts.reshape(-1, 4)
        return {tuple(int(v) for v in row) for row in np.unique(flat, axis=0)}


def signature_counts(T: np.ndarray, eps: float, m0: float, points_per_piece: int = 2000) -> np.ndarray:
    """Fast per-class root counts for many horizons at one ``eps`` (``m0 >= 0``).

    Pure sign-change counting; agrees with :func:`find_equilibria` except on
    a band of width ~grid-spacing around tangency curves.
    """
    T = np.asarray(T, dtype=float)
    if m0 < 0:
        raise ValueError("signature_counts expects m0 >= 0; mirror beforehand")
    out = np.zeros((T.size, 4), dtype=int)
    pieces = {
        0: (eps, 1.0),      # polarized coherent (eps, 1]
        1: (-1.0, -eps),    # polarized incoherent [-1, -eps)
        2: (0.0, eps),      # unpolarized coherent (0, eps]
        3: (-eps, 0.0),     # unpolarized incoherent [-eps, 0]
    }
    for k, (a, b) in pieces.items():
        if b <= a:
            continue
        m = np.linspace(a, b, points_per_piece)
        f = consistency_F_raw(m[None, :], T[:, None], eps, m0)
        s = np.sign(f)
        c = np.sum(s[:, :-1] * s[:, 1:] < 0, axis=1)
        # exact zeros on a closed end of the class interval
        if k in (0,):
            c += s[:, -1] == 0
        elif k == 1:
            c += s[:, 0] == 0
            c += s[:, -1] == 0
        elif k == 2:
            c += s[:, -1] == 0
        else:
            c += s[:, 0] == 0
            c += s[:, -1] == 0
        out[:, k] = c
    return out


def phase_grid(eps_values, T_values, m0: float, points_per_piece: int = 2000,
               with_curves: bool = True) -> PhaseGrid:
    """Signature grid over ``eps_values x T_values`` for fixed ``m0``.

    Counts are sign-change counts per class (see :func:`signature_counts`).
    ``with_curves`` adds the analytic boundary curves sampled at the grid's
    ``eps`` values.
    """
    eps_values = np.asarray(eps_values, dtype=float)
    T_values = np.asarray(T_values, dtype=float)
    if np.any(eps_values <= 0) or np.any(eps_values > 1) or np.any(T_values <= 0):
        raise ValueError("eps must lie in (0, 1] and T must be positive")
    mm = abs(m0)
    counts = np.zeros((T_values.size, eps_values.size, 4), dtype=int)
    for j, e in enumerate(eps_values):
        counts[:, j, :] = signature_counts(T_values, float(e), mm, points_per_piece)
    curves = {}
    if with_curves:
        from .curves import sample_curves

        curves = sample_curves(eps_values, mm)
    return PhaseGrid(m0, eps_values, T_values, counts, curves)
