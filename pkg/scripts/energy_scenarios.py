"""Energy series of the shipped linear scenarios and the one-step matrix norm.

    python3 scripts/energy_scenarios.py --out results/energy
"""

import argparse
from pathlib import Path

import numpy as np

from swerect.core import sobolev_norm
from swerect.io import emit_series
from swerect.scenarios import LINEAR_SCENARIOS, linear_scenario, quasi_contraction


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-end", type=float, default=0.2)
    ap.add_argument("--sobolev", type=int, nargs="*", default=[1, 2, 3], help="H^k norms to track")
    ap.add_argument("--out", type=Path, default=Path("results/energy"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for name in LINEAR_SCENARIOS:
        prob, traj, rep = linear_scenario(name, t_end=args.t_end)
        cols = rep.columns()
        for k in args.sobolev:
            cols[f"H{k}"] = np.array([sobolev_norm(s, k) for s in traj])
        emit_series(cols, args.out / f"{name}.csv", "energy")
        print(f"{name:9s} r1={rep.fitted_r1:.4g} bound_ok={rep.bound_ok} I0(T)/I0max={rep.I0[-1] / max(rep.I0.max(), 1e-300):.3f}")
    qc = quasi_contraction()
    print(f"one-step matrix: weighted norm {qc['norm']:.6f}, limit {qc['limit']:.6f}, dt {qc['dt']:.4g}")


if __name__ == "__main__":
    main()
