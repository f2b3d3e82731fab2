"""Critical curves of the phase diagram.

Polarized branch: on ``m > eps`` the residual can be written as
``1 - m - (1 - m0)/(eps T)^2 * phi((1 + m T)/(eps T))`` with
``phi(y) = (y^2 + 1)/(y^2 - 1)^2``, which gives cheap analytic derivatives
for the tangency system ``F = dF/dm = 0``.

Unpolarized branch: with ``u = m/eps`` and ``r = eps T`` the tangency system
reduces to a single equation in ``s = r^2`` (see :func:`v_s`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect, brentq, minimize_scalar

from .core import consistency_F_raw


def t_star(eps: float, m0: float) -> float:
    """Horizon at which ``m = eps`` solves the consistency equation."""
    if not (m0 < eps < (1 + m0) / 2):
        raise ValueError(f"t_star needs m0 < eps < (1+m0)/2, got eps={eps}, m0={m0}")
    return (-1.0 + math.sqrt((1 - m0) / (1 + m0 - 2 * eps))) / (2 * eps)


def dF_dm_at_eps(eps: float, T: float, m0: float) -> float:
    """Right derivative of the residual in ``m`` at ``m = eps``."""
    a = 2 * eps * T + 1
    return -1.0 + (1 - m0) * T * (1.0 + a**-3)


def big_G(eps: float, m0: float) -> float:
    """``dF/dm`` at ``(m, T) = (eps, T*(eps, m0))`` in closed form."""
    if not (m0 < eps < (1 + m0) / 2):
        raise ValueError(f"big_G needs m0 < eps < (1+m0)/2, got eps={eps}, m0={m0}")
    y = math.sqrt((1 - m0) / (1 + m0 - 2 * eps))
    return -1.0 + (1 - m0) * (y * y - 1) * (y * y - y + 1) / (2 * eps * y**3)


def eps_star1(m0: float, xtol: float = 1e-13) -> float:
    """Smallest ``eps`` above which the polarized coherent branch has a fold."""
    if not (0 <= m0 < 1):
        raise ValueError("eps_star1 needs 0 <= m0 < 1")
    if m0 == 0:
        return 0.0  # G(0+, 0) = 0 and G increases, so G > 0 on all of (0, 1/2)
    lo, hi = m0, (1 + m0) / 2
    d = 1e-12 * max(1.0, hi - lo)
    if big_G(lo + d, m0) >= 0:
        return lo
    # G -> +inf at hi; walk in until the bracket is finite
    b = hi - d
    while not np.isfinite(big_G(b, m0)):
        b = hi - 10 * (hi - b)
    return bisect(lambda e: big_G(e, m0), lo + d, b, xtol=xtol, maxiter=500)


# --- polarized tangency ----------------------------------------------------

def phi(y):
    return (y * y + 1) / (y * y - 1) ** 2


def dphi(y):
    return -2 * y * (3 + y * y) / (y * y - 1) ** 3


def d2phi(y):
    return 6 * (y**4 + 6 * y * y + 1) / (y * y - 1) ** 4


def _pol_system(m, T, eps, m0):
    """(F, F_m, F_T, F_mm, F_mT) on the polarized piece."""
    c = (1 - m0) / (eps * T) ** 2
    y = (1 + m * T) / (eps * T)
    p0, p1, p2 = phi(y), dphi(y), d2phi(y)
    F = 1 - m - c * p0
    Fm = -1 - c * p1 / eps
    Fmm = -c * p2 / eps**2
    FT = 2 * c * p0 / T + c * p1 / (eps * T * T)
    FmT = 2 * c * p1 / (eps * T) + c * p2 / (eps * eps * T * T)
    return F, Fm, FT, Fmm, FmT


def _max_pol(T, eps, m0):
    # F is concave on (eps, 1]
    f = lambda m: -consistency_F_raw(m, T, eps, m0)
    res = minimize_scalar(f, bounds=(eps, 1.0), method="bounded", options={"xatol": 1e-13})
    return float(res.x), -float(res.fun)


def _newton_tangency(m, T, eps, m0, T_hi, maxiter=60):
    for _ in range(maxiter):
        F, Fm, FT, Fmm, FmT = _pol_system(m, T, eps, m0)
        det = Fm * FmT - FT * Fmm
        if det == 0 or not np.isfinite(det):
            return None
        dm = (F * FmT - FT * Fm) / det
        dT = (Fm * Fm - F * Fmm) / det
        # J = [[Fm, FT], [Fmm, FmT]], solve J d = (F, Fm)
        m, T = m - dm, T - dT
        if not (eps < m <= 1.0 and 0 < T <= T_hi):
            return None
        if abs(dm) < 1e-15 and abs(dT) < 1e-14 * max(1.0, T):
            break
    F, Fm, *_ = _pol_system(m, T, eps, m0)
    if abs(F) < 1e-12 and abs(Fm) < 1e-10:
        return m, T
    return None


def _tc_bracket(eps, m0):
    if eps >= 1.0 or eps <= m0:
        return None
    if eps < (1 + m0) / 2:
        if big_G(eps, m0) <= 0:
            return None
        return 0.0, t_star(eps, m0)
    hi = 1.0
    while _max_pol(hi, eps, m0)[1] <= 0:
        hi *= 2
        if hi > 1e9:
            return None
    return 0.0, hi


def t_c_polarized(eps: float, m0: float, with_m: bool = False):
    """Fold horizon ``T_c^(1)`` of the polarized branch on ``(eps, 1]``, or ``None``.

    Works for either sign of ``m0``; the incoherent-side fold is
    ``t_c_polarized(eps, -m0)``. Seeds a 2-D Newton iteration from a coarse
    scan and falls back to bisection on ``T -> max_m F`` (monotone in ``T``).
    """
    br = _tc_bracket(eps, m0)
    if br is None:
        return None
    _, T_hi = br
    mg = eps + (1 - eps) * np.linspace(0.0025, 1.0, 200)
    Tg = T_hi * np.geomspace(1e-4, 1.0, 200)
    M, TT = np.meshgrid(mg, Tg)
    with np.errstate(all="ignore"):
        F, Fm, *_ = _pol_system(M, TT, eps, m0)
    score = np.abs(F) + np.abs(Fm)
    score[~np.isfinite(score)] = np.inf
    k = np.unravel_index(np.argmin(score), score.shape)
    sol = _newton_tangency(float(M[k]), float(TT[k]), eps, m0, T_hi)
    if sol is None:
        g = lambda T: _max_pol(T, eps, m0)[1]
        lo = T_hi * 1e-6
        T = brentq(g, lo, T_hi, xtol=1e-14, rtol=1e-14)
        m = _max_pol(T, eps, m0)[0]
        sol = _newton_tangency(m, T, eps, m0, T_hi * (1 + 1e-9)) or (m, T)
    m, T = sol
    return (T, m) if with_m else T


# --- unpolarized tangency --------------------------------------------------

def _U_u(u, eps, r, m0):
    D = (1 + r) ** 2 - r * r * u * u
    return -2 * m0 * r * (1 + r - r * u) + 2 * (1 + m0) * r * (1 + r) - eps * D * D + 4 * eps * r * r * u * u * D


def v_s(s, eps: float, m0: float):
    """Tangency function in ``s = (eps T)^2`` for the unpolarized coherent piece.

    ``v_s(s) = dU/du`` at ``u = (m0 / (4 eps s))^(1/3)`` with
    ``U = m0 (1+r-ru)^2 + 2 (1+m0) r (1+r) u - eps u ((1+r)^2 - r^2 u^2)^2``,
    ``r = sqrt(s)``. Its zeros with ``s > m0/(4 eps)`` are ``(eps T_c)^2``.
    """
    s = np.asarray(s, dtype=float)
    s0 = m0 / (4 * eps)
    if np.any(s < s0 * (1 - 1e-12)):
        raise ValueError(f"v_s needs s >= m0/(4 eps) = {s0}")
    r = np.sqrt(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(s > 0, np.cbrt(m0 / (4 * eps * np.where(s > 0, s, 1.0))), 0.0)
    u = np.minimum(u, 1.0)
    out = _U_u(u, eps, r, m0)
    return out[()] if out.ndim == 0 else out


def _vs_upper(eps, m0, s0):
    hi = max(1.0, 4 * s0)
    while v_s(hi, eps, m0) > min(0.0, float(v_s(s0, eps, m0))) - 1.0:
        hi *= 2
    return hi


def vs_max(eps: float, m0: float) -> tuple[float, float]:
    """Maximiser and maximum of ``s -> v_s(s)`` on ``[m0/(4 eps), inf)``."""
    s0 = m0 / (4 * eps)
    hi = _vs_upper(eps, m0, s0)
    grid = s0 + (hi - s0) * np.linspace(0, 1, 401) ** 2
    vals = v_s(grid, eps, m0)
    k = int(np.argmax(vals))
    lo_b, hi_b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(lambda s: -v_s(s, eps, m0), bounds=(lo_b, hi_b), method="bounded",
                          options={"xatol": 1e-14})
    s_best, v_best = float(res.x), -float(res.fun)
    if vals[k] > v_best:
        s_best, v_best = float(grid[k]), float(vals[k])
    return s_best, v_best


def eps_star2(m0: float, xtol: float = 1e-13) -> float:
    if not (0 <= m0 < 1):
        raise ValueError("eps_star2 needs 0 <= m0 < 1")
    if m0 == 0:
        return 0.0
    g = lambda e: float(v_s(m0 / (4 * e), e, m0))
    return bisect(g, m0, (1 + m0) / 2, xtol=xtol, maxiter=500)


def eps_star3(m0: float, xtol: float = 1e-13) -> float:
    """``eps`` at which ``max_s v_s`` touches zero."""
    if not (0 <= m0 < 1):
        raise ValueError("eps_star3 needs 0 <= m0 < 1")
    lo = eps_star2(m0)
    hi = (1 + m0) / 2
    g = lambda e: vs_max(e, m0)[1]
    a = lo if lo > 0 else 1e-9
    if g(a) <= 0:
        raise RuntimeError("max v_s not positive at eps_star2")
    # max v_s decreases in eps; vanishes with zero slope at (1+m0)/2 only for m0=1
    return bisect(g, a, hi - 1e-12, xtol=xtol, maxiter=500)


def t_c_unpolarized(eps: float, m0: float, tol: float = 1e-12) -> list[float]:
    """Fold horizons of the unpolarized coherent piece ``(0, eps)`` (0, 1 or 2)."""
    if m0 < 0 or eps <= 0:
        raise ValueError("t_c_unpolarized needs m0 >= 0 and eps > 0")
    s0 = m0 / (4 * eps)
    v0 = float(v_s(s0, eps, m0))
    s_max, v_max = vs_max(eps, m0)
    hi = _vs_upper(eps, m0, s0)
    f = lambda s: float(v_s(s, eps, m0))
    roots: list[float] = []
    if v0 >= 0 and s0 > 0:
        a = max(s_max, s0)
        if f(a) > 0:
            roots.append(brentq(f, a, hi, xtol=1e-15, rtol=1e-15))
    elif v_max > tol:
        roots.append(brentq(f, s0, s_max, xtol=1e-15, rtol=1e-15))
        roots.append(brentq(f, s_max, hi, xtol=1e-15, rtol=1e-15))
    elif abs(v_max) <= tol:
        roots.append(s_max)
    return [math.sqrt(s) / eps for s in roots]


# --- bundle -----------------------------------------------------------------

@dataclass(frozen=True)
class CriticalCurves:
    t_star: float | None
    t_c1: float | None
    t_c2: float | None
    t_c3: float | None
    t_star_incoherent: float | None
    t_c1_incoherent: float | None
    eps_star1: float
    eps_star2: float
    eps_star3: float


def critical_curves(eps: float, m0: float) -> CriticalCurves:
    """All critical horizons at one ``(eps, m0)``, ``m0 >= 0``."""
    if m0 < 0:
        raise ValueError("critical_curves expects m0 >= 0")
    ts = t_star(eps, m0) if m0 < eps < (1 + m0) / 2 else None
    tsi = t_star(eps, -m0) if -m0 < eps < (1 - m0) / 2 else None
    tcu = t_c_unpolarized(eps, m0)
    return CriticalCurves(
        t_star=ts,
        t_c1=t_c_polarized(eps, m0),
        t_c2=tcu[0] if tcu else None,
        t_c3=tcu[1] if len(tcu) > 1 else None,
        t_star_incoherent=tsi,
        t_c1_incoherent=t_c_polarized(eps, -m0),
        eps_star1=eps_star1(m0),
        eps_star2=eps_star2(m0),
        eps_star3=eps_star3(m0),
    )


CURVE_NAMES = ("t_star", "t_c1", "t_c2", "t_c3", "t_star_incoherent", "t_c1_incoherent")


def sample_curves(eps_values, m0: float) -> dict[str, np.ndarray]:
    """Critical horizons at each ``eps`` (NaN where a curve does not exist)."""
    out = {k: np.full(len(eps_values), np.nan) for k in CURVE_NAMES}
    for j, e in enumerate(eps_values):
        e = float(e)
        if m0 < e < (1 + m0) / 2:
            out["t_star"][j] = t_star(e, m0)
        if -m0 < e < (1 - m0) / 2:
            out["t_star_incoherent"][j] = t_star(e, -m0)
        v = t_c_polarized(e, m0)
        if v is not None:
            out["t_c1"][j] = v
        v = t_c_polarized(e, -m0)
        if v is not None:
            out["t_c1_incoherent"][j] = v
        tcu = t_c_unpolarized(e, m0)
        if tcu:
            out["t_c2"][j] = tcu[0]
        if len(tcu) > 1:
            out["t_c3"][j] = tcu[1]
    return out
