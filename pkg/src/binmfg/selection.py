"""Costs of equilibria and the underdog-cost selection rule.

The finite-population game is observed to settle on the coherent equilibrium
that is cheapest for the subpopulation whose field opposes the initial
majority (the "underdog"). For ``m0 >= 0`` that is the ``-eps`` group.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams, value_function
from .equilibrium import Equilibrium, find_equilibria

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostBreakdown:
    j_minus: float
    j_plus: float
    j_total: float

    def underdog(self, m0: float) -> float:
        return self.j_plus if m0 < 0 else self.j_minus


@dataclass(frozen=True)
class SelectionResult:
    chosen: Equilibrium
    all_coherent: list[tuple[Equilibrium, CostBreakdown]]
    crossing_times: list[float] = field(default_factory=list)
    tie: bool = False


def initial_value(x: int, y: float, mT: float, T: float) -> float:
    """Value at ``t = 0`` of a player in state ``x`` with field ``y`` if the terminal mean is ``mT``."""
    if abs(mT) > 1 or T <= 0:
        raise ValueError("need |mT| <= 1 and T > 0")
    a = abs(mT + y)
    if np.sign(mT + y) == -x:
        return -a + 2 * a / (T * a + 1)
    return -a


def cost_breakdown(mT: float, p: ModelParams) -> CostBreakdown:
    wm, wp = (1 - p.m0) / 2, (1 + p.m0) / 2
    jm = wm * initial_value(-1, -p.eps, mT, p.T) + wp * initial_value(1, -p.eps, mT, p.T)
    jp = wm * initial_value(-1, p.eps, mT, p.T) + wp * initial_value(1, p.eps, mT, p.T)
    return CostBreakdown(jm, jp, 0.5 * (jm + jp))


def is_coherent(m: float, m0: float) -> bool:
    # m = 0 only arises when m0 is (numerically) zero, where every root counts
    return bool(np.sign(m) * np.sign(m0) >= 0)


def _pick(cands, key):
    # smallest key; ties (1e-12) go to larger |m|
    best = min(key(c) for c in cands)
    tied = [c for c in cands if key(c) - best <= 1e-12 * max(1.0, abs(best))]
    tied.sort(key=lambda c: (abs(c[0].m), c[0].m))
    return tied[-1], len(tied) > 1


def predict_selected(p: ModelParams, eqs: list[Equilibrium] | None = None) -> SelectionResult:
    """Coherent equilibrium minimising the underdog cost."""
    if eqs is None:
        eqs = find_equilibria(p)
    if not eqs:
        raise RuntimeError(f"no equilibrium found for {p}")
    coh = [(e, cost_breakdown(e.m, p)) for e in eqs if is_coherent(e.m, p.m0)]
    if not coh:
        raise RuntimeError(f"no coherent equilibrium found for {p}")
    (chosen, _), tie = _pick(coh, lambda c: c[1].underdog(p.m0))
    if tie:
        log.info("selection tie at %s; took larger |m|", p)
    return SelectionResult(chosen, coh, [], tie)


def min_total_cost_equilibrium(p: ModelParams, eqs: list[Equilibrium] | None = None) -> Equilibrium:
    """Equilibrium (coherent or not) with the lowest average cost."""
    if eqs is None:
        eqs = find_equilibria(p)
    if not eqs:
        raise RuntimeError(f"no equilibrium found for {p}")
    allc = [(e, cost_breakdown(e.m, p)) for e in eqs]
    return _pick(allc, lambda c: c[1].j_total)[0][0]


def _selected_polarized(eps, m0, T, grid_points):
    p = ModelParams(T, eps, m0)
    return abs(predict_selected(p, find_equilibria(p, grid_points)).chosen.m) > eps


def branch_crossing_times(eps: float, m0: float, T_range=(0.01, 15.0), dT: float = 0.01,
                          xtol: float = 1e-4, grid_points: int = 4000) -> list[float]:
    """Horizons where the selected equilibrium switches between polarized and unpolarized.

    The selected branch is re-solved on a ``dT`` grid over ``T_range``; each
    change of polarization status is refined by bisection to ``xtol``. This
    covers both a jump between the polarized and unpolarized coherent
    branches (their underdog costs cross) and a continuous passage of the
    selected root through ``|m| = eps``.
    """
    lo, hi = T_range
    if not (0 < lo < hi) or dT <= 0:
        raise ValueError("need 0 < T_lo < T_hi and dT > 0")
    Ts = np.arange(lo, hi + 0.5 * dT, dT)
    state = [_selected_polarized(eps, m0, float(T), grid_points) for T in Ts]
    out = []
    for i in range(len(Ts) - 1):
        if state[i] == state[i + 1]:
            continue
        a, b, sa = float(Ts[i]), float(Ts[i + 1]), state[i]
        while b - a > xtol:
            c = 0.5 * (a + b)
            if _selected_polarized(eps, m0, c, grid_points) == sa:
                a = c
            else:
                b = c
        out.append(0.5 * (a + b))
    return out


@dataclass
class SelectionCurve:
    """Per-horizon record of both minimisers along a ``T`` sweep."""

    T: np.ndarray
    selected_m: np.ndarray
    selected_j_minus: np.ndarray
    min_total_m: np.ndarray
    min_total_j: np.ndarray
    selected_j_total: np.ndarray


def selection_curve(eps: float, m0: float, Ts) -> SelectionCurve:
    Ts = np.asarray(Ts, dtype=float)
    cols = np.zeros((5, Ts.size))
    for i, T in enumerate(Ts):
        p = ModelParams(float(T), eps, m0)
        eqs = find_equilibria(p)
        sel = predict_selected(p, eqs).chosen
        cb = cost_breakdown(sel.m, p)
        mt = min_total_cost_equilibrium(p, eqs)
        cols[:, i] = (sel.m, cb.underdog(m0), mt.m, cost_breakdown(mt.m, p).j_total, cb.j_total)
    return SelectionCurve(Ts, *cols)
