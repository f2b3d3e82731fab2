"""Selection sweeps along T: equilibrium branches with simulations, branch crossings,
and the selected-versus-minimum-total-cost comparison."""

import argparse
import sys

from binmfg.cli import FIG2_PANELS, main as cli_main


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/selection")
    ap.add_argument("--S", type=int, default=100)
    ap.add_argument("--N", type=int, default=30)
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--T-max", type=float, default=15.0)
    ap.add_argument("--sim-step", type=float, default=1.0)
    ap.add_argument("--skip-sim", action="store_true", help="only the deterministic sweeps")
    a = ap.parse_args(argv)
    common = ["--T-max", str(a.T_max), "--out", a.out]
    jobs = [["experiment", "--fig4", *common], ["experiment", "--fig6", *common]]
    if not a.skip_sim:
        jobs += [["experiment", "--fig2", "--panel", p, "--N", str(a.N), "--S", str(a.S), "--seed", str(a.seed),
                  "--sim-step", str(a.sim_step), *common] for p in sorted(FIG2_PANELS)]
    for argv_ in jobs:
        print(" ".join(["binmfg", *argv_]), flush=True)
        code = cli_main(argv_)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
