"""Closed-form solution of the mean field game for a fixed terminal mean ``m``.

For a candidate terminal mean ``m`` the representative player's control
problem decouples by local field ``y``; everything below is explicit.
Functions accept numpy arrays for ``t`` and ``m`` where it is cheap to do so.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """One game instance: horizon ``T``, field strength ``eps``, initial mean ``m0``."""

    T: float
    eps: float
    m0: float

    def __post_init__(self):
        if not (self.T > 0 and np.isfinite(self.T)):
            raise ValueError(f"horizon T must be positive and finite, got {self.T}")
        if not (0 < self.eps <= 1):
            raise ValueError(f"field strength eps must lie in (0, 1], got {self.eps}")
        if not (-1 <= self.m0 <= 1):
            raise ValueError(f"initial mean m0 must lie in [-1, 1], got {self.m0}")

    def with_m0(self, m0: float) -> "ModelParams":
        return ModelParams(self.T, self.eps, m0)

    def with_T(self, T: float) -> "ModelParams":
        return ModelParams(T, self.eps, self.m0)


def _check_time(t, T):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > T):
        raise ValueError(f"time must lie in [0, {T}]")
    return t


def z_gap(t, y: float, m, p: ModelParams):
    """HJB gap ``V(t,-1,y) - V(t,1,y)``; solves ``z' = z|z|/2`` with ``z(T) = 2(m+y)``."""
    t = _check_time(t, p.T)
    a = np.asarray(m, dtype=float) + y
    out = 2.0 * a / (np.abs(a) * (p.T - t) + 1.0)
    return out[()] if np.ndim(out) == 0 else out


def value_function(t, x: int, y: float, m, p: ModelParams):
    t = _check_time(t, p.T)
    a = np.asarray(m, dtype=float) + y
    aa = np.abs(a)
    # sign(m+y) == -x is the only branch that pays to flip; sign 0 is aligned
    opposed = np.sign(a) == -x
    out = -aa + np.where(opposed, 2.0 * aa / (aa * (p.T - t) + 1.0), 0.0)
    return out[()] if np.ndim(out) == 0 else out


def optimal_rate(t, x: int, y: float, m, p: ModelParams):
    """Optimal flip intensity ``(x z)^-``."""
    z = z_gap(t, y, m, p)
    out = np.maximum(0.0, -x * np.asarray(z))
    return out[()] if np.ndim(out) == 0 else out


def conditional_mean(t, y: float, m, p: ModelParams):
    """``E[x(t) | y]`` under the optimal control for terminal mean ``m``.

    When ``m + y = 0`` nobody flips and the mean stays at ``m0``.
    """
    t = _check_time(t, p.T)
    a = np.asarray(m, dtype=float) + y
    aa = np.abs(a)
    rho = np.sign(a)
    ratio = (aa * (p.T - t) + 1.0) / (aa * p.T + 1.0)
    out = rho * (1.0 - (1.0 - rho * p.m0) * ratio**2)
    out = np.where(rho == 0, p.m0 + 0.0 * out, out)
    return out[()] if np.ndim(out) == 0 else out


def population_mean(t, m, p: ModelParams):
    return 0.5 * (conditional_mean(t, p.eps, m, p) + conditional_mean(t, -p.eps, m, p))


def _branch_term(a, T, m0, side):
    # rho [1 - (1 - rho m0) / (|a| T + 1)^2]; the |a| -> 0 limit is m0 from both sides
    rho = np.sign(a)
    if side is not None:
        rho = np.where(rho == 0, float(side), rho)
    term = rho * (1.0 - (1.0 - rho * m0) / (np.abs(a) * T + 1.0) ** 2)
    return np.where(rho == 0, m0, term)


def consistency_F(m, p: ModelParams, side: int | None = None):
    """Consistency residual ``E[x^m(T)] - m``; its zeros are the equilibria.

    ``side`` (+1 or -1) chooses which one-sided sign convention to use when
    ``m = +-eps`` exactly. The residual is continuous there, so both
    conventions give the same value.
    """
    m = np.asarray(m, dtype=float)
    out = (
        0.5 * _branch_term(m + p.eps, p.T, p.m0, side)
        + 0.5 * _branch_term(m - p.eps, p.T, p.m0, side)
        - m
    )
    return out[()] if np.ndim(out) == 0 else out


def consistency_F_raw(m, T, eps, m0):
    """Vectorised residual with broadcastable parameter arrays (no validation)."""
    m = np.asarray(m, dtype=float)
    a = m + eps
    b = m - eps
    ra = np.sign(a)
    rb = np.sign(b)
    ta = ra * (1.0 - (1.0 - ra * m0) / (np.abs(a) * T + 1.0) ** 2)
    tb = rb * (1.0 - (1.0 - rb * m0) / (np.abs(b) * T + 1.0) ** 2)
    ta = np.where(ra == 0, m0, ta)
    tb = np.where(rb == 0, m0, tb)
    return 0.5 * (ta + tb) - m
