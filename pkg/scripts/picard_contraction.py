"""Picard contraction ratios as the time horizon shrinks.

    python3 scripts/picard_contraction.py --n 65 --t-end 0.4 --halvings 4
"""

import argparse
from pathlib import Path

import numpy as np

from swerect.core import Grid, Params
from swerect.io import emit_series
from swerect.scenarios import picard_contraction


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=65)
    ap.add_argument("--t-end", type=float, default=0.4)
    ap.add_argument("--halvings", type=int, default=4)
    ap.add_argument("--amplitude-factor", type=float, default=0.5, help="bump amplitude as a multiple of delta")
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--out", type=Path, default=Path("results/picard"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    runs, failures = picard_contraction(
        Grid.square(args.n), Params(), args.t_end, args.amplitude_factor, halvings=args.halvings, tol=args.tol
    )
    for t, name in failures:
        print(f"T={t:g}: {name}")
    rows = {"t_end": [], "iterates": [], "max_ratio": [], "first_ratio": []}
    for t, rep, _ in runs:
        emit_series(rep, args.out / f"iterations_T{t:g}.csv", "iteration")
        rows["t_end"].append(t)
        rows["iterates"].append(rep.iterates)
        rows["max_ratio"].append(rep.max_ratio)
        rows["first_ratio"].append(rep.ratios[0] if rep.ratios else np.nan)
        print(f"T={t:<8g} iterates={rep.iterates:2d} ratios=" + " ".join(f"{r:.4f}" for r in rep.ratios))
    emit_series(rows, args.out / "summary.csv", "picard_sweep")


if __name__ == "__main__":
    main()
