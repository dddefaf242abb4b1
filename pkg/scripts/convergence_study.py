"""Manufactured-solution refinement for the linear evolution and the resolvent solve.

    python3 scripts/convergence_study.py --grids 33 65 129 --out results/convergence
"""

import argparse
from pathlib import Path

from swerect.core import Params
from swerect.io import emit_series
from swerect.scenarios import linear_convergence, resolvent_convergence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=[33, 65, 129])
    ap.add_argument("--t-end", type=float, default=0.2)
    ap.add_argument("--f", type=float, default=0.05, help="Coriolis parameter for the linear study")
    ap.add_argument("--out", type=Path, default=Path("results/convergence"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    studies = {
        "linear": linear_convergence(args.grids, Params(f=args.f), t_end=args.t_end),
        "resolvent": resolvent_convergence(args.grids),
    }
    for name, res in studies.items():
        schema, cols = res.series["convergence"]
        emit_series(cols, args.out / f"{name}.csv", schema)
        print(f"{name:10s}", "  ".join(f"n={n}: err={e:.3e}" for n, e in zip(args.grids, cols["error"])))
        print(f"{'':10s} orders", ", ".join(f"{o:.3f}" for o in res.constants["orders"]), res.checks)


if __name__ == "__main__":
    main()
