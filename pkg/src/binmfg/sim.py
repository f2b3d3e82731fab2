"""Continuous-time Markov chain simulation of the N-player population.

Only the aggregate counts ``(n_plus, n_minus)`` evolve; the fields are split
deterministically (``n_eps`` players at ``+eps``). Within each control-grid
cell ``[t_k, t_{k+1})`` the rates are frozen at node ``k``, so an exponential
clock against the total rate is exact; a clock that overruns the cell is
discarded and redrawn at the boundary (memorylessness).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ModelParams
from .hjb import ControlTable, HjbConfig, RateConvention, solve_hjb
from .selection import predict_selected

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SimConfig:
    n_players: int
    n_eps: int
    replications: int
    seed: int
    params: ModelParams
    control: ControlTable = field(repr=False, compare=False)

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not (0 <= self.n_eps <= self.n_players):
            raise ValueError("n_eps must lie in [0, n_players]")
        h = self.control.header
        p = self.params
        want = {"N": self.n_players, "n_eps": self.n_eps, "eps": p.eps, "m0": p.m0, "T": p.T}
        bad = {k: (h.get(k), v) for k, v in want.items() if h.get(k) != v}
        if bad:
            raise ValueError(f"control table does not match simulation config: {bad}")


@dataclass
class Trajectory:
    jump_times: list[float]
    states: list[tuple[int, int]]  # state after each jump; states[0] is the initial state
    terminal_mean: float
    cost_minus: float = math.nan
    cost_plus: float = math.nan


@dataclass
class SimSummary:
    mean: float
    sd: float
    samples: np.ndarray
    cost_minus: float
    cost_plus: float
    cost_minus_samples: np.ndarray
    cost_plus_samples: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "mean": self.mean,
            "sd": self.sd,
            "replications": int(self.samples.size),
            "cost_minus": self.cost_minus,
            "cost_plus": self.cost_plus,
        }


def sample_initial(m0: float, N: int, n_eps: int, rng: np.random.Generator) -> tuple[int, int]:
    q = (1 + m0) / 2
    return int(rng.binomial(n_eps, q)), int(rng.binomial(N - n_eps, q))


def simulate_path(cfg: SimConfig, rng: np.random.Generator, record: bool = True) -> Trajectory:
    N, ne = cfg.n_players, cfg.n_eps
    T, eps = cfg.params.T, cfg.params.eps
    ctrl = cfg.control
    K = ctrl.K
    h = T / K
    # rates[xi, yi] indexed [n_plus, n_minus, k]
    a_up_p = ctrl.rates[0, 1]
    a_dn_p = ctrl.rates[1, 1]
    a_up_m = ctrl.rates[0, 0]
    a_dn_m = ctrl.rates[1, 0]

    npl, nmi = sample_initial(cfg.params.m0, N, ne, rng)
    times: list[float] = []
    states = [(npl, nmi)]
    run_p = 0.0  # accumulated running cost, summed over +eps players
    run_m = 0.0
    t = 0.0
    k = 0
    while k < K:
        t_end = (k + 1) * h
        # per-player rates of the four classes, index arguments as in the transition list
        up_p = a_up_p[npl, nmi, k] if npl < ne else 0.0
        dn_p = a_dn_p[npl - 1, nmi, k] if npl > 0 else 0.0
        up_m = a_up_m[npl, nmi, k] if nmi < N - ne else 0.0
        dn_m = a_dn_m[npl, nmi - 1, k] if nmi > 0 else 0.0
        r1 = (ne - npl) * up_p
        r2 = npl * dn_p
        r3 = (N - ne - nmi) * up_m
        r4 = nmi * dn_m
        R = r1 + r2 + r3 + r4
        cp = 0.5 * (r1 * up_p + r2 * dn_p)
        cm = 0.5 * (r3 * up_m + r4 * dn_m)
        if R <= 0.0:
            t, k = t_end, k + 1
            continue
        w = rng.exponential(1.0 / R)
        if t + w >= t_end:
            run_p += (t_end - t) * cp
            run_m += (t_end - t) * cm
            t, k = t_end, k + 1
            continue
        run_p += w * cp
        run_m += w * cm
        t += w
        u = rng.random() * R
        if u < r1:
            npl += 1
        elif u < r1 + r2:
            npl -= 1
        elif u < r1 + r2 + r3:
            nmi += 1
        else:
            nmi -= 1
        if record:
            times.append(t)
            states.append((npl, nmi))
    mN = 2.0 * (npl + nmi) / N - 1.0
    # terminal reward -x (m_N + y), summed over each field group
    term_p = -(npl - (ne - npl)) * (mN + eps)
    term_m = -(nmi - (N - ne - nmi)) * (mN - eps)
    c_plus = (run_p + term_p) / ne if ne > 0 else math.nan
    c_minus = (run_m + term_m) / (N - ne) if N > ne else math.nan
    if not record:
        states = [states[0], (npl, nmi)]
    return Trajectory(times, states, mN, c_minus, c_plus)


def replication_rngs(seed: int, S: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(S)]


def monte_carlo(cfg: SimConfig, threads: int = 1) -> SimSummary:
    """``S`` independent replications, one spawned RNG stream each, folded in index order."""
    rngs = replication_rngs(cfg.seed, cfg.replications)

    def one(i):
        return simulate_path(cfg, rngs[i], record=False)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            paths = list(ex.map(one, range(cfg.replications)))
    else:
        paths = [one(i) for i in range(cfg.replications)]
    samples = np.array([p.terminal_mean for p in paths])
    cm = np.array([p.cost_minus for p in paths])
    cp = np.array([p.cost_plus for p in paths])
    sd = float(np.std(samples, ddof=1)) if samples.size > 1 else 0.0
    return SimSummary(float(np.mean(samples)), sd, samples, float(np.mean(cm)), float(np.mean(cp)), cm, cp)


def default_time_steps(T: float) -> int:
    return max(2000, int(math.ceil(200 * T)))


def build_sim(p: ModelParams, n_players: int, replications: int, seed: int,
              n_eps: int | None = None, time_steps: int | None = None,
              rate_convention: RateConvention | str = RateConvention.PERSPECTIVE_SHIFT) -> SimConfig:
    """Solve the matching HJB and wrap it in a :class:`SimConfig`."""
    ne = n_players // 2 if n_eps is None else n_eps
    K = default_time_steps(p.T) if time_steps is None else time_steps
    _, ctrl = solve_hjb(HjbConfig(n_players, ne, p, K, RateConvention(rate_convention)))
    return SimConfig(n_players, ne, replications, seed, p, ctrl)


@dataclass
class SweepPoint:
    T: float
    summary: SimSummary
    predicted_m: float


def selection_sweep(eps: float, m0: float, T_list, n_players: int = 30, replications: int = 100,
                    seed: int = 0, time_steps: int | None = None, threads: int = 1,
                    rate_convention: RateConvention | str = RateConvention.PERSPECTIVE_SHIFT) -> list[SweepPoint]:
    out = []
    for T in T_list:
        p = ModelParams(float(T), eps, m0)
        cfg = build_sim(p, n_players, replications, seed, time_steps=time_steps,
                        rate_convention=rate_convention)
        summ = monte_carlo(cfg, threads)
        out.append(SweepPoint(float(T), summ, predict_selected(p).chosen.m))
        log.info("T=%g mean=%.4f sd=%.4f predicted=%.4f", T, summ.mean, summ.sd, out[-1].predicted_m)
    return out


def samples_csv(summary: SimSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replication", "m_N_T", "cost_minus", "cost_plus"])
    for i, (m, a, b) in enumerate(zip(summary.samples, summary.cost_minus_samples, summary.cost_plus_samples)):
        w.writerow([i, repr(float(m)), repr(float(a)), repr(float(b))])
    return buf.getvalue()


def summary_json(summary: SimSummary, extra: dict | None = None) -> str:
    d = summary.to_json_dict()
    if extra:
        d.update(extra)
    return json.dumps(d, indent=2, sort_keys=True) + "\n"
