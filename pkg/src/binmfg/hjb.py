"""Symmetric N-player HJB system and its equilibrium feedback table.

The representative player (state ``x``, field ``y``) faces ``N`` others of
which ``n_eps`` carry field ``+eps``; ``n_plus``/``n_minus`` count the
others in state ``+1`` within the ``+eps``/``-eps`` groups. Values are a cost
(lower is better); the equilibrium flip rate is the negative part of the
gap ``V(-x) - V(x)``.

Layout of every table: ``values[xi, yi, n_plus, n_minus, k]`` with
``xi = 0, 1`` for ``x = -1, +1``, ``yi = 0, 1`` for ``y = -eps, +eps`` and
``k = 0..K`` at ``t = k T / K``. Entries with ``n_plus > n_eps`` (``yi``
slices share a box) do not occur because both slices use the same
``(n_eps + 1, N - n_eps + 1)`` shape.
"""

from __future__ import annotations

import enum
import io
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .core import ModelParams

log = logging.getLogger(__name__)

BLOWUP = 1e3
ORACLE_MAX_PLAYERS = 3
MAGIC = b"BINMFG-CONTROL-TABLE v1\n"


class RateConvention(str, enum.Enum):
    PAPER_PRINTED = "paper_printed"
    PERSPECTIVE_SHIFT = "perspective_shift"


class HjbBlowUpError(RuntimeError):
    """Values left the bounded range; the step size or the indexing is wrong."""


@dataclass(frozen=True)
class HjbConfig:
    n_others: int
    n_eps: int
    params: ModelParams
    time_steps: int = 2000
    rate_convention: RateConvention = RateConvention.PERSPECTIVE_SHIFT
    # terminal reward -x (m + y); False drops y as in the bare printed display
    terminal_field: bool = True

    def __post_init__(self):
        if self.n_others < 1:
            raise ValueError("n_others must be >= 1")
        if not (0 <= self.n_eps <= self.n_others):
            raise ValueError("n_eps must lie in [0, n_others]")
        if self.time_steps < 100:
            raise ValueError("time_steps must be >= 100")
        object.__setattr__(self, "rate_convention", RateConvention(self.rate_convention))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (2, 2, self.n_eps + 1, self.n_others - self.n_eps + 1)

    def header(self) -> dict:
        p = self.params
        return {
            "N": self.n_others, "n_eps": self.n_eps, "eps": p.eps, "m0": p.m0, "T": p.T,
            "K": self.time_steps, "rate_convention": self.rate_convention.value,
            "terminal_field": self.terminal_field,
        }


def state_count(N: int, n_eps: int) -> int:
    if N < 0 or not (0 <= n_eps <= N):
        raise ValueError(f"need 0 <= n_eps <= N, got N={N}, n_eps={n_eps}")
    return 4 * (n_eps + 1) * (N - n_eps + 1)


def _yi(y) -> int:
    return 1 if y > 0 else 0


def _xi(x) -> int:
    if x not in (-1, 1):
        raise ValueError("x must be -1 or +1")
    return (x + 1) // 2


# --- single field slices -----------------------------------------------------
# A slice holds the values of a representative with field sign ``ys`` who sees
# ``ne`` others at +eps: array[xi, n_plus, n_minus] of shape (2, ne+1, N-ne+1).

def _slice_terminal(ys: int, ne: int, N: int, eps: float, with_field: bool) -> np.ndarray:
    npl = np.arange(ne + 1)[:, None]
    nmi = np.arange(N - ne + 1)[None, :]
    out = np.empty((2, ne + 1, N - ne + 1))
    y = ys * eps if with_field else 0.0
    for xi, x in ((0, -1), (1, 1)):
        # integer numerator keeps mirrored states exact negatives of each other
        m = (2 * (npl + nmi + (x == 1)) - (N + 1)) / (N + 1)
        out[xi] = -x * (m + y)
    return out


def terminal_condition(cfg: HjbConfig) -> np.ndarray:
    """Values at ``t = T``, shape ``(2, 2, n_eps+1, N-n_eps+1)``."""
    N, ne, eps = cfg.n_others, cfg.n_eps, cfg.params.eps
    out = np.empty(cfg.shape)
    for yi, ys in ((0, -1), (1, 1)):
        out[:, yi] = _slice_terminal(ys, ne, N, eps, cfg.terminal_field)
    return out


def _take(a: np.ndarray, dp: int, dm: int, shape) -> np.ndarray:
    """``a[i + dp, j + dm]`` on an index box of ``shape``; zero outside ``a``."""
    P, M = shape
    out = np.zeros(shape)
    Pa, Ma = a.shape
    p0, p1 = max(0, -dp), min(P, Pa - dp)
    m0, m1 = max(0, -dm), min(M, Ma - dm)
    if p1 > p0 and m1 > m0:
        out[p0:p1, m0:m1] = a[p0 + dp:p1 + dp, m0 + dm:m1 + dm]
    return out


def _flip_rates(S: np.ndarray):
    """(rate of a -1 player, rate of a +1 player) in a slice."""
    return np.maximum(0.0, S[0] - S[1]), np.maximum(0.0, S[1] - S[0])


def _slice_rhs(S, ys, ne, N, conv, lookup):
    """``dV/dt`` for one slice; ``lookup(ys', ne')`` gives flip rates of other slices."""
    P, M = S.shape[1:]
    npl = np.arange(P)[:, None].astype(float)
    nmi = np.arange(M)[None, :].astype(float)
    up_own, down_own = _flip_rates(S)
    if conv is RateConvention.PERSPECTIVE_SHIFT:
        up_p, down_p = lookup(1, ne - 1 + (ys == 1))
        up_m, down_m = lookup(-1, ne + (ys == 1))
    else:
        up_p, down_p = lookup(1, ne)
        up_m, down_m = lookup(-1, ne)
    out = np.empty_like(S)
    for xi, x in ((0, -1), (1, 1)):
        V = S[xi]
        if conv is RateConvention.PERSPECTIVE_SHIFT:
            rp = int(x == 1 and ys == 1)
            rm = int(x == 1 and ys == -1)
            g_p = _take(up_p, rp, rm, (P, M))
            d_p = _take(down_p, rp - 1, rm, (P, M))
            g_m = _take(up_m, rp, rm, (P, M))
            d_m = _take(down_m, rp, rm - 1, (P, M))
        else:
            i1, im1 = int(x == 1), int(x == -1)
            g_p = _take(up_p, i1, 0, (P, M))
            d_p = _take(down_p, -im1, 0, (P, M))
            g_m = _take(up_m, 0, i1, (P, M))
            d_m = _take(down_m, 0, -im1, (P, M))
        gamma_p = (ne - npl) * g_p
        delta_p = npl * d_p
        gamma_m = (N - ne - nmi) * g_m
        delta_m = nmi * d_m
        own = up_own if x == -1 else down_own
        out[xi] = 0.5 * own * own - (
            gamma_p * (_take(V, 1, 0, (P, M)) - V)
            + delta_p * (_take(V, -1, 0, (P, M)) - V)
            + gamma_m * (_take(V, 0, 1, (P, M)) - V)
            + delta_m * (_take(V, 0, -1, (P, M)) - V)
        )
    return out


class _System:
    """A closed set of slices integrated together."""

    def __init__(self, keys, N, eps, conv, with_field):
        self.keys = [k for k in keys if 0 <= k[1] <= N]
        self.N, self.conv = N, conv
        self.shapes = {k: (2, k[1] + 1, N - k[1] + 1) for k in self.keys}
        self.sizes = {k: int(np.prod(s)) for k, s in self.shapes.items()}
        self.offsets = {}
        off = 0
        for k in self.keys:
            self.offsets[k] = off
            off += self.sizes[k]
        self.size = off
        self.eps, self.with_field = eps, with_field

    def unpack(self, flat):
        return {k: flat[self.offsets[k]:self.offsets[k] + self.sizes[k]].reshape(self.shapes[k])
                for k in self.keys}

    def terminal(self):
        return np.concatenate([
            _slice_terminal(ys, ne, self.N, self.eps, self.with_field).ravel() for ys, ne in self.keys
        ])

    def rhs(self, flat):
        slices = self.unpack(flat)
        rates = {k: _flip_rates(S) for k, S in slices.items()}

        def lookup(ys, ne):
            r = rates.get((ys, ne))
            if r is None:
                # no flipper of this kind exists (zero count); shape is irrelevant
                z = np.zeros((1, 1))
                return z, z
            return r

        return np.concatenate([
            _slice_rhs(slices[k], k[0], k[1], self.N, self.conv, lookup).ravel() for k in self.keys
        ])


def _rk4_backward(f, v_T, T, K, store):
    """Integrate ``dv/dt = f(v)`` from ``t = T`` to ``0`` in ``K`` steps; ``store(k, v)``."""
    h = T / K
    v = v_T.copy()
    store(K, v)
    for k in range(K, 0, -1):
        k1 = f(v)
        k2 = f(v - 0.5 * h * k1)
        k3 = f(v - 0.5 * h * k2)
        k4 = f(v - h * k3)
        v = v - (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > BLOWUP:
            raise HjbBlowUpError(f"|V| exceeded {BLOWUP:g} at step {k - 1} of {K}")
        store(k - 1, v)
    return v


def _systems(cfg: HjbConfig):
    """Closed systems to integrate and the (slice key -> yi) they deliver."""
    N, ne = cfg.n_others, cfg.n_eps
    eps, conv, wf = cfg.params.eps, cfg.rate_convention, cfg.terminal_field
    if conv is RateConvention.PAPER_PRINTED:
        return [(_System([(1, ne), (-1, ne)], N, eps, conv, wf), {(1, ne): 1, (-1, ne): 0})]
    # a +eps representative and a -eps flipper see one more +eps player
    return [
        (_System([(1, ne), (-1, ne + 1)], N, eps, conv, wf), {(1, ne): 1}),
        (_System([(-1, ne), (1, ne - 1)], N, eps, conv, wf), {(-1, ne): 0}),
    ]


def hjb_rhs(v: np.ndarray, cfg: HjbConfig) -> np.ndarray:
    """``dV/dt`` for a table slice of shape ``(2, 2, n_eps+1, N-n_eps+1)``.

    Under ``perspective_shift`` the flipping players' rates come from slices
    with a shifted ``n_eps``; this evaluator approximates those by the
    corresponding slice of ``v`` and is therefore exact only for
    ``paper_printed``. :func:`solve_hjb` integrates the exact closed systems.
    """
    N, ne = cfg.n_others, cfg.n_eps
    slices = {(1, ne): v[:, 1], (-1, ne): v[:, 0]}
    rates = {k: _flip_rates(S) for k, S in slices.items()}

    def lookup(ys, ne_):
        return rates[(ys, ne)]

    out = np.empty_like(v)
    for yi, ys in ((0, -1), (1, 1)):
        out[:, yi] = _slice_rhs(slices[(ys, ne)], ys, ne, N, cfg.rate_convention, lookup)
    return out


@dataclass
class ValueTable:
    cfg: HjbConfig
    values: np.ndarray  # (2, 2, n_eps+1, N-n_eps+1, K+1)

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.cfg.params.T, self.cfg.time_steps + 1)

    def at(self, x: int, y: float, n_plus: int, n_minus: int, k: int) -> float:
        return float(self.values[_xi(x), _yi(y), n_plus, n_minus, k])


@dataclass
class ControlTable:
    header: dict
    rates: np.ndarray  # (2, 2, n_eps+1, N-n_eps+1, K+1), nonnegative

    @property
    def N(self) -> int:
        return int(self.header["N"])

    @property
    def n_eps(self) -> int:
        return int(self.header["n_eps"])

    @property
    def K(self) -> int:
        return int(self.header["K"])

    @property
    def T(self) -> float:
        return float(self.header["T"])

    def rate(self, x: int, y: float, n_plus: int, n_minus: int, k: int) -> float:
        return float(self.rates[_xi(x), _yi(y), n_plus, n_minus, k])

    def write(self, path) -> None:
        """Magic line, one JSON header line, then little-endian float64 rates in C order."""
        hdr = dict(self.header)
        hdr["layout"] = "x,y,n_plus,n_minus,k"
        hdr["shape"] = list(self.rates.shape)
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(json.dumps(hdr, sort_keys=True).encode() + b"\n")
            fh.write(np.ascontiguousarray(self.rates, dtype="<f8").tobytes())

    @classmethod
    def read(cls, path) -> "ControlTable":
        with open(path, "rb") as fh:
            if fh.readline() != MAGIC:
                raise ValueError(f"{path}: not a control table")
            hdr = json.loads(fh.readline())
            data = np.frombuffer(fh.read(), dtype="<f8")
        shape = tuple(hdr.pop("shape"))
        hdr.pop("layout", None)
        if data.size != int(np.prod(shape)):
            raise ValueError(f"{path}: truncated table")
        return cls(hdr, data.reshape(shape).copy())


def feedback_rate(v: ValueTable, x: int, y: float, n_plus: int, n_minus: int, k: int) -> float:
    """Equilibrium flip rate ``[V(-x) - V(x)]^-`` at one table entry."""
    xi, yi = _xi(x), _yi(y)
    gap = v.values[1 - xi, yi, n_plus, n_minus, k] - v.values[xi, yi, n_plus, n_minus, k]
    return max(0.0, -float(gap))


def control_from_values(values: np.ndarray) -> np.ndarray:
    rates = np.empty_like(values)
    rates[0] = np.maximum(0.0, values[0] - values[1])
    rates[1] = np.maximum(0.0, values[1] - values[0])
    return rates


def solve_hjb(cfg: HjbConfig) -> tuple[ValueTable, ControlTable]:
    """Backward fixed-step RK4 solve of the symmetric system on ``K`` uniform steps."""
    K, T = cfg.time_steps, cfg.params.T
    values = np.empty(cfg.shape + (K + 1,))
    for system, deliver in _systems(cfg):
        def store(k, flat, system=system, deliver=deliver):
            sl = system.unpack(flat)
            for key, yi in deliver.items():
                values[:, yi, :, :, k] = sl[key]

        _rk4_backward(system.rhs, system.terminal(), T, K, store)
    values[..., K] = terminal_condition(cfg)
    ctrl = ControlTable(cfg.header(), control_from_values(values))
    log.debug("solved HJB: %d states, K=%d", state_count(cfg.n_others, cfg.n_eps), K)
    return ValueTable(cfg, values), ctrl


# --- full-state oracle --------------------------------------------------------

def full_hjb_oracle(N_total: int, y_assignment, p: ModelParams, K: int = 2000) -> np.ndarray:
    """Per-player values on the full state space ``{-1, 1}^N_total``.

    Returns ``v[k, i, s]`` at ``t = k T / K``; bit ``j`` of ``s`` set means
    ``x_j = +1``. ``y_assignment`` holds each player's field sign (or value).
    """
    if not (1 <= N_total <= ORACLE_MAX_PLAYERS):
        raise ValueError(f"oracle supports 1..{ORACLE_MAX_PLAYERS} players")
    ys = np.array([p.eps if y > 0 else -p.eps for y in y_assignment], dtype=float)
    if ys.size != N_total:
        raise ValueError("one field per player required")
    n_states = 2**N_total
    s = np.arange(n_states)
    x = np.array([np.where((s >> i) & 1, 1.0, -1.0) for i in range(N_total)])  # (N, S)
    mN = x.mean(axis=0)
    flip = [s ^ (1 << j) for j in range(N_total)]
    vT = -x * (mN[None, :] + ys[:, None])

    def rhs(flat):
        v = flat.reshape(N_total, n_states)
        out = np.zeros_like(v)
        rate = [np.maximum(0.0, -(v[j, flip[j]] - v[j])) for j in range(N_total)]
        for i in range(N_total):
            acc = np.zeros(n_states)
            for j in range(N_total):
                acc += rate[j] * (v[i, flip[j]] - v[i])
            out[i] = -acc - 0.5 * rate[i] ** 2
        return out.ravel()

    traj = np.empty((K + 1, N_total, n_states))

    def store(k, flat):
        traj[k] = flat.reshape(N_total, n_states)

    _rk4_backward(rhs, vT.ravel(), p.T, K, store)
    return traj


def oracle_state(x_all, y_signs):
    """``(s, n_plus, n_minus, n_eps)`` of player 0's view for a full configuration."""
    s = sum(1 << j for j, xj in enumerate(x_all) if xj == 1)
    others = list(zip(x_all[1:], y_signs[1:]))
    n_plus = sum(1 for xj, yj in others if xj == 1 and yj > 0)
    n_minus = sum(1 for xj, yj in others if xj == 1 and yj < 0)
    n_eps = sum(1 for _, yj in others if yj > 0)
    return s, n_plus, n_minus, n_eps
