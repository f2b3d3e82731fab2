"""Command-line front end: ``binmfg <command> ...``.

Every command writes its outputs plus a ``<command>_manifest.json`` into the
output directory (``--out``, else ``$BINMFG_OUTDIR``, else ``./runs``). A
manifest stores the full resolved configuration, so ``binmfg replay
<manifest>`` reproduces the outputs byte for byte.

Exit codes: 0 ok, 2 invalid parameters, 3 HJB blow-up, 4 control table /
simulation config mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import ModelParams
from .curves import critical_curves, eps_star1, eps_star2, eps_star3, sample_curves, CURVE_NAMES
from .equilibrium import find_equilibria, phase_grid, REGIONS
from .hjb import ControlTable, HjbBlowUpError, HjbConfig, RateConvention, solve_hjb, state_count
from .selection import (branch_crossing_times, cost_breakdown, min_total_cost_equilibrium,
                        predict_selected)
from .sim import SimConfig, build_sim, monte_carlo, samples_csv, selection_sweep, summary_json

log = logging.getLogger("binmfg")

EXIT_PARAMS, EXIT_BLOWUP, EXIT_MISMATCH = 2, 3, 4

# reference parameter rows (T, m0, eps)
TABLE2_ROWS = [
    (1.0, 0.1, 0.42), (1.0, 0.1, 0.45), (1.0, 0.1, 0.5),
    (1.0, 0.5, 0.55), (1.0, 0.5, 0.6), (1.0, 0.5, 0.7),
    (2.3, 0.2, 0.5), (2.3, 0.2, 0.58), (2.8, 0.2, 0.5),
    (3.5, 0.2, 0.7), (5.5, 0.2, 0.7), (9.0, 0.2, 0.7),
]
FIG2_PANELS = {"A": 0.5, "B": 0.52, "C": 0.6}


class UsageError(Exception):
    pass


class MismatchError(Exception):
    pass


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _range(s: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in s.split(","))
    except ValueError as exc:
        raise UsageError(f"range must be 'lo,hi', got {s!r}") from exc
    if not lo < hi:
        raise UsageError(f"empty range {s!r}")
    return lo, hi


def _params(a) -> ModelParams:
    try:
        return ModelParams(a.T, a.eps, a.m0)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _threads(a) -> int:
    if getattr(a, "threads", None):
        return max(1, a.threads)
    env = os.environ.get("BINMFG_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


class Run:
    """Collects outputs of one command and writes the manifest."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.config = {k: v for k, v in vars(args).items() if k not in ("func", "out", "verbose")}
        out = args.out or os.environ.get("BINMFG_OUTDIR") or "runs"
        self.outdir = Path(out)
        self.files: list[str] = []
        self.t0 = time.perf_counter()

    def write(self, name: str, text: str | None = None) -> Path:
        self.outdir.mkdir(parents=True, exist_ok=True)
        path = self.outdir / name
        if text is not None:
            path.write_text(text)
        self.files.append(name)
        return path

    def finish(self) -> Path:
        manifest = {
            "command": self.command,
            "config": self.config,
            "seed": self.config.get("seed"),
            "version": __version__,
            "wall_time_s": round(time.perf_counter() - self.t0, 3),
            "outputs": self.files,
        }
        self.outdir.mkdir(parents=True, exist_ok=True)
        path = self.outdir / f"{self.command}_manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


# --- commands -------------------------------------------------------------------

def cmd_equilibria(a) -> int:
    p = _params(a)
    eqs = find_equilibria(p, a.grid, a.tol)
    rows = [(e.m, e.cls.value, e.tangent) for e in eqs]
    for m, c, t in rows:
        print(f"{m: .10f}  {c:<22s} {'tangent' if t else ''}")
    if a.csv:
        run = Run("equilibria", a)
        run.write(a.csv, _csv(rows, ["m", "class", "tangent"]))
        run.finish()
    return 0


def cmd_phase(a) -> int:
    elo, ehi = _range(a.eps_range)
    tlo, thi = _range(a.T_range)
    if elo <= 0 or ehi > 1 or tlo <= 0 or not -1 <= a.m0 <= 1 or a.res < 2:
        raise UsageError("need 0 < eps <= 1, T > 0, |m0| <= 1, res >= 2")
    eps = np.linspace(elo, ehi, a.res)
    T = np.linspace(tlo, thi, a.res)
    g = phase_grid(eps, T, a.m0, with_curves=True)
    rid = g.region_ids
    rows = []
    for i, t in enumerate(T):
        for j, e in enumerate(eps):
            c = g.counts[i, j]
            rows.append((e, t, *map(int, c), int(rid[i, j]) or ""))
    run = Run("phase", a)
    run.write("phase_grid.csv", _csv(rows, ["eps", "T", "n_pc", "n_pi", "n_uc", "n_ui", "region"]))
    crow = [(e, *(g.curves[k][j] for k in CURVE_NAMES)) for j, e in enumerate(eps)]
    run.write("phase_curves.csv", _csv(crow, ["eps", *CURVE_NAMES]))
    run.finish()
    sigs = g.distinct_signatures()
    print(f"{len(sigs)} distinct signatures")
    for s in sorted(sigs):
        rid_ = next((k for k, v in REGIONS.items() if v == s), None)
        print(f"  {s}  region {rid_ if rid_ else '-'}")
    return 0


def cmd_critical(a) -> int:
    m0 = a.m0
    if not 0 <= m0 < 1:
        raise UsageError("critical thresholds need 0 <= m0 < 1")
    e1, e2, e3 = eps_star1(m0), eps_star2(m0), eps_star3(m0)
    print(f"eps_star1 = {e1:.12f}")
    print(f"eps_star2 = {e2:.12f}")
    print(f"eps_star3 = {e3:.12f}")
    ok = (m0 <= e1 and m0 <= e2 and e2 < e3 < (1 + m0) / 2)
    print(f"ordering m0 <= eps_star1, eps_star2 and eps_star2 < eps_star3 < (1+m0)/2: {'ok' if ok else 'VIOLATED'}")
    if a.csv:
        eps = np.linspace(a.samples_lo, 1.0, a.samples)
        cur = sample_curves(eps, m0)
        run = Run("critical", a)
        run.write(a.csv, _csv([(e, *(cur[k][j] for k in CURVE_NAMES)) for j, e in enumerate(eps)],
                              ["eps", *CURVE_NAMES]))
        run.finish()
    return 0


def cmd_hjb(a) -> int:
    p = _params(a)
    try:
        cfg = HjbConfig(a.N, a.neps, p, a.steps, RateConvention(a.convention))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(state_count(a.N, a.neps))
    _, ctrl = solve_hjb(cfg)
    run = Run("hjb", a)
    ctrl.write(run.write(a.table))
    run.finish()
    return 0


def cmd_simulate(a) -> int:
    run = Run("simulate", a)
    try:
        ctrl = ControlTable.read(a.control_file)
    except (OSError, ValueError) as exc:
        raise MismatchError(str(exc)) from exc
    h = ctrl.header
    for flag, key in (("N", "N"), ("neps", "n_eps"), ("T", "T"), ("eps", "eps"), ("m0", "m0")):
        v = getattr(a, flag)
        if v is not None and v != h[key]:
            raise MismatchError(f"--{flag}={v} but control table has {key}={h[key]}")
    if a.S < 1:
        raise UsageError("--S must be >= 1")
    try:
        p = ModelParams(h["T"], h["eps"], h["m0"])
        cfg = SimConfig(int(h["N"]), int(h["n_eps"]), a.S, a.seed, p, ctrl)
    except ValueError as exc:
        raise MismatchError(str(exc)) from exc
    summ = monte_carlo(cfg, _threads(a))
    if a.S == 1:
        summ.sd = math.nan
    run.write("samples.csv", samples_csv(summ))
    d = summ.to_json_dict()
    if a.S == 1:
        d["sd"] = None
    d.update({"T": p.T, "eps": p.eps, "m0": p.m0, "N": cfg.n_players, "n_eps": cfg.n_eps, "seed": a.seed})
    run.write("summary.json", json.dumps(d, indent=2, sort_keys=True) + "\n")
    run.finish()
    sd = "null" if a.S == 1 else f"{summ.sd:.4f}"
    print(f"mean {summ.mean:.4f}  sd {sd}  (S={a.S})")
    return 0


def _table2(a, run):
    rows = []
    for T, m0, eps in TABLE2_ROWS:
        p = ModelParams(T, eps, m0)
        m_T = predict_selected(p).chosen.m
        cfg = build_sim(p, a.N, a.S, a.seed, time_steps=a.steps)
        s = monte_carlo(cfg, _threads(a))
        diff = abs(s.mean - m_T)
        rows.append((T, m0, eps, m_T, s.mean, s.sd, diff, diff / s.sd if s.sd > 0 else math.inf))
        print(f"T={T:<4} m0={m0:<4} eps={eps:<5} m_T={m_T:.4f} mean={s.mean:.4f} sd={s.sd:.4f} ratio={rows[-1][-1]:.3f}")
    run.write("table2.csv", _csv(rows, ["T", "m0", "eps", "m_T", "mean", "sd", "absdiff", "ratio"]))


def _equilibrium_rows(eps, m0, Ts):
    rows = []
    for T in Ts:
        p = ModelParams(float(T), eps, m0)
        eqs = find_equilibria(p)
        sel = predict_selected(p, eqs).chosen.m
        for e in eqs:
            cb = cost_breakdown(e.m, p)
            rows.append((T, e.m, e.cls.value, cb.j_minus, cb.j_plus, cb.j_total, int(e.m == sel)))
    return rows


EQ_HEADER = ["T", "m", "class", "j_minus", "j_plus", "j_total", "selected"]


def _fig2(a, run):
    eps = FIG2_PANELS[a.panel]
    m0 = a.m0
    Ts = np.round(np.arange(a.T_step, a.T_max + 1e-9, a.T_step), 10)
    run.write(f"fig2{a.panel}_equilibria.csv", _csv(_equilibrium_rows(eps, m0, Ts), EQ_HEADER))
    Tsim = np.round(np.arange(a.sim_step, a.T_max + 1e-9, a.sim_step), 10)
    pts = selection_sweep(eps, m0, Tsim, a.N, a.S, a.seed, a.steps, _threads(a))
    rows = [(q.T, q.summary.mean, q.summary.sd, q.predicted_m) for q in pts]
    run.write(f"fig2{a.panel}_simulation.csv", _csv(rows, ["T", "mean", "sd", "predicted_m"]))


def _fig4(a, run):
    Ts = np.round(np.arange(a.T_step, a.T_max + 1e-9, a.T_step), 10)
    rows, cross = [], []
    for eps in (0.5, 0.52):
        rows += [(eps, *r) for r in _equilibrium_rows(eps, a.m0, Ts)]
        cross += [(eps, t) for t in branch_crossing_times(eps, a.m0, (a.T_step, a.T_max))]
    run.write("fig4_branches.csv", _csv(rows, ["eps", *EQ_HEADER]))
    run.write("fig4_crossings.csv", _csv(cross, ["eps", "T_cross"]))
    for e, t in cross:
        print(f"eps={e}: crossing at T={t:.4f}")


def _fig6(a, run):
    eps = 0.52
    Ts = np.round(np.arange(a.T_step, a.T_max + 1e-9, a.T_step), 10)
    rows = []
    for T in Ts:
        p = ModelParams(float(T), eps, a.m0)
        eqs = find_equilibria(p)
        sel = predict_selected(p, eqs).chosen
        mt = min_total_cost_equilibrium(p, eqs)
        rows.append((T, sel.m, mt.m, cost_breakdown(sel.m, p).j_total, cost_breakdown(mt.m, p).j_total,
                     int(sel.m == mt.m)))
    run.write("fig6.csv", _csv(rows, ["T", "m_selected", "m_min_total", "J_selected", "J_min", "coincide"]))
    cross = branch_crossing_times(eps, a.m0, (a.T_step, a.T_max))
    run.write("fig6_crossings.csv", _csv([(t,) for t in cross], ["T_cross"]))


def cmd_experiment(a) -> int:
    run = Run("experiment", a)
    if a.table2:
        _table2(a, run)
    elif a.fig2:
        if a.panel not in FIG2_PANELS:
            raise UsageError("--fig2 needs --panel A|B|C")
        _fig2(a, run)
    elif a.fig4:
        _fig4(a, run)
    elif a.fig6:
        _fig6(a, run)
    run.finish()
    return 0


def cmd_replay(a) -> int:
    man = json.loads(Path(a.manifest).read_text())
    cfg = dict(man["config"])
    cfg["out"] = a.out or str(Path(a.manifest).parent)
    cfg["verbose"] = False
    ns = argparse.Namespace(**cfg)
    return COMMANDS[man["command"]](ns)


COMMANDS = {
    "equilibria": cmd_equilibria,
    "phase": cmd_phase,
    "critical": cmd_critical,
    "hjb": cmd_hjb,
    "simulate": cmd_simulate,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="binmfg", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")

    def model(sp):
        sp.add_argument("--T", type=float, required=True)
        sp.add_argument("--eps", type=float, required=True)
        sp.add_argument("--m0", type=float, required=True)

    sp = sub.add_parser("equilibria", help="all equilibria at one parameter point")
    model(sp)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--grid", type=int, default=10_000)
    sp.add_argument("--csv", default=None, help="also write rows to this file in the output dir")
    common(sp)
    sp.set_defaults(func=cmd_equilibria)

    sp = sub.add_parser("phase", help="signature grid and critical curves")
    sp.add_argument("--m0", type=float, default=0.25)
    sp.add_argument("--eps-range", default="0.0025,1")
    sp.add_argument("--T-range", default="0.0375,15")
    sp.add_argument("--res", type=int, default=400)
    common(sp)
    sp.set_defaults(func=cmd_phase)

    sp = sub.add_parser("critical", help="critical field strengths")
    sp.add_argument("--m0", type=float, required=True)
    sp.add_argument("--csv", default=None, help="write curve samples to this file")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--samples-lo", type=float, default=0.005)
    common(sp)
    sp.set_defaults(func=cmd_critical)

    sp = sub.add_parser("hjb", help="solve the N-player HJB and write the control table")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--neps", type=int, default=None)
    model(sp)
    sp.add_argument("--steps", type=int, default=2000)
    sp.add_argument("--convention", default=RateConvention.PERSPECTIVE_SHIFT.value,
                    choices=[c.value for c in RateConvention])
    sp.add_argument("--table", default="control.bin", help="control table file name")
    common(sp)
    sp.set_defaults(func=cmd_hjb)

    sp = sub.add_parser("simulate", help="Monte Carlo runs under a stored control table")
    sp.add_argument("--control-file", required=True)
    sp.add_argument("--S", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=None)
    for f, t in (("--N", int), ("--neps", int), ("--T", float), ("--eps", float), ("--m0", float)):
        sp.add_argument(f, type=t, default=None, help="must match the table if given")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("experiment", help="reproduction bundles")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--table2", action="store_true")
    g.add_argument("--fig2", action="store_true")
    g.add_argument("--fig4", action="store_true")
    g.add_argument("--fig6", action="store_true")
    sp.add_argument("--panel", choices=sorted(FIG2_PANELS), default=None)
    sp.add_argument("--m0", type=float, default=0.25)
    sp.add_argument("--N", type=int, default=None, help="players (60 for table2, 30 otherwise)")
    sp.add_argument("--S", type=int, default=100)
    sp.add_argument("--seed", type=int, default=20240101)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--T-max", type=float, default=15.0)
    sp.add_argument("--T-step", type=float, default=0.05)
    sp.add_argument("--sim-step", type=float, default=1.0)
    sp.add_argument("--threads", type=int, default=None)
    common(sp)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("replay", help="re-run a command from its manifest")
    sp.add_argument("manifest")
    sp.add_argument("--out", default=None)
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_replay)
    return ap


def _resolve_defaults(a):
    if a.command == "hjb" and a.neps is None:
        a.neps = a.N // 2
    if a.command == "experiment" and a.N is None:
        a.N = 60 if a.table2 else 30


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    _resolve_defaults(a)
    try:
        return a.func(a)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except HjbBlowUpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except MismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
