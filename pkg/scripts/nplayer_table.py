"""Solve the N-player game for every reference row and compare Monte Carlo means
with the mean-field prediction."""

import argparse
import sys

from binmfg.cli import main as cli_main


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=60)
    ap.add_argument("--S", type=int, default=100)
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="runs/nplayer")
    a = ap.parse_args(argv)
    argv_ = ["experiment", "--table2", "--N", str(a.N), "--S", str(a.S), "--seed", str(a.seed), "--out", a.out]
    if a.threads:
        argv_ += ["--threads", str(a.threads)]
    return cli_main(argv_)


if __name__ == "__main__":
    sys.exit(main())
