"""Gradient-flow experiments: perturbed commuting pairs versus the Voiculescu family.

For each dimension, runs ``--trials`` seeded flows from 0.2-perturbations of
random commuting pairs (group Z^2) and one flow from the Voiculescu matrices
(group Gamma), then prints the outcome counts and final defects.

    python scripts/flow_experiments.py --dims 4 8 16 --trials 20
"""

import argparse
import time
from collections import Counter

import numpy as np

from aga.almostrep import perturb, random_commuting_rep, voiculescu_family
from aga.homotopy import FlowConfig, check_path_invariants, flow_minimize
from aga.presentation import free_abelian


def z2_trials(n, trials, budget, seed0):
    statuses, defects, steps = Counter(), [], []
    for k in range(trials):
        base = random_commuting_rep(free_abelian(2), n, np.random.default_rng(seed0 + k))
        tr = flow_minimize(perturb(base, 0.2, seed0 + k), FlowConfig(budget=budget, stride=budget))
        statuses[tr.status] += 1
        defects.append(tr.final.defect)
        steps.append(tr.steps)
    return statuses, np.array(defects), np.array(steps)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs="+", default=[4, 8])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--budget", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for n in args.dims:
        t0 = time.perf_counter()
        statuses, defects, steps = z2_trials(n, args.trials, args.budget, args.seed)
        print(f"Z^2   n={n:3d}  {dict(statuses)}  max final defect {defects.max():.2e}  "
              f"median steps {int(np.median(steps))}  ({time.perf_counter() - t0:.1f}s)")

        cfg = FlowConfig(budget=args.budget, stride=1, track_invariants=True)
        tr = flow_minimize(voiculescu_family(n), cfg)
        report = check_path_invariants(tr, ("a", "c"), "b")
        print(f"Gamma n={n:3d}  {tr.status} after {tr.steps} steps  defect {tr.samples[0].defect:.4f} -> "
              f"{tr.final.defect:.4f}  objective {tr.samples[0].objective:.4f} -> {tr.final.objective:.4f}  "
              f"invariants {report}")


if __name__ == "__main__":
    main()
