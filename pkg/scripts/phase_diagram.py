"""Phase diagram over (eps, T): region signatures, their census, and the critical curves."""

import argparse
import sys
from collections import Counter

import numpy as np

from binmfg.cli import main as cli_main
from binmfg.equilibrium import REGIONS, phase_grid


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m0", type=float, default=0.25)
    ap.add_argument("--res", type=int, default=400)
    ap.add_argument("--out", default="runs/phase")
    a = ap.parse_args(argv)
    code = cli_main(["phase", "--m0", str(a.m0), "--res", str(a.res), "--out", a.out])
    if code:
        return code
    eps = np.linspace(0.0025, 1.0, a.res)
    T = np.linspace(0.0375, 15.0, a.res)
    grid = phase_grid(eps, T, a.m0)
    census = Counter(map(tuple, grid.counts.reshape(-1, 4).tolist()))
    names = {v: k for k, v in REGIONS.items()}
    for sig, n in sorted(census.items(), key=lambda kv: names.get(kv[0], 99)):
        print(f"region {names.get(sig, '?')}: signature {sig} at {n} grid points")
    return 0


if __name__ == "__main__":
    sys.exit(main())
