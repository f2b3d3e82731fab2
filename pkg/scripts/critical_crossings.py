"""Check that the equilibrium count jumps by two across each critical curve."""

import argparse
import sys

import numpy as np

from binmfg.core import ModelParams
from binmfg.curves import eps_star1, eps_star2, eps_star3, t_c_polarized, t_c_unpolarized
from binmfg.equilibrium import find_equilibria


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m0", type=float, default=0.25)
    ap.add_argument("--n", type=int, default=20, help="random eps per curve")
    ap.add_argument("--dT", type=float, default=1e-3)
    ap.add_argument("--tol", type=float, default=1e-14, help="tangency tolerance for root counting")
    ap.add_argument("--seed", type=int, default=5)
    a = ap.parse_args(argv)
    rng = np.random.default_rng(a.seed)
    e1, e2, e3 = eps_star1(a.m0), eps_star2(a.m0), eps_star3(a.m0)
    curves = {
        "T_c1": (lambda e: t_c_polarized(e, a.m0), (e1, 1.0)),
        "T_c2": (lambda e: t_c_unpolarized(e, a.m0)[0], (0.005, e3)),
        "T_c3": (lambda e: t_c_unpolarized(e, a.m0)[1], (e2, e3)),
    }

    def count(T, e):
        return len(find_equilibria(ModelParams(T, e, a.m0), tol=a.tol))

    bad = 0
    print("curve,eps,T_c,count_below,count_above")
    for name, (fn, (lo, hi)) in curves.items():
        for e in rng.uniform(lo, hi, a.n):
            e = float(e)
            Tc = fn(e)
            below, above = count(Tc - a.dT, e), count(Tc + a.dT, e)
            bad += abs(above - below) != 2
            print(f"{name},{e:.6f},{Tc:.6f},{below},{above}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
