"""Commutator path lifting and surface-group reduction at desk scale.

    python scripts/lift_and_reduce.py --trials 10 --genus 2 --n 4 --eps 0.05
"""

import argparse

import numpy as np

from aga.almostrep import max_defect, perturb_to_defect, random_surface_rep
from aga.homotopy import (
    SurfaceReductionError,
    gamma_commutator,
    lift_commutator_path,
    su_geodesic_to_identity,
    surface_reduce,
)
from aga.numerics import operator_norm, random_unitary


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--lift-n", type=int, default=3)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--delta", type=float, default=1e-3)
    ap.add_argument("--genus", type=int, default=2)
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--eps", type=float, default=0.05)
    args = ap.parse_args()

    print("lift of geodesic commutator paths")
    for seed in range(args.trials):
        rng = np.random.default_rng(seed)
        u, v = random_unitary(args.lift_n, rng), random_unitary(args.lift_n, rng)
        path = su_geodesic_to_identity(gamma_commutator(u, v), args.samples)
        res = lift_commutator_path(u, v, path, args.delta)
        print(f"  seed {seed}: {res.status}  max residual {res.max_residual:.2e}")

    print(f"surface reduction, genus {args.genus}, n={args.n}, eps={args.eps}")
    for seed in range(args.trials):
        rng = np.random.default_rng(seed)
        rep = perturb_to_defect(random_surface_rep(args.genus, args.n, rng), args.eps, seed)
        eps = max_defect(rep)
        try:
            tr = surface_reduce(rep)
        except SurfaceReductionError as exc:
            print(f"  seed {seed}: failed at stage {exc.stage}: {exc}")
            continue
        eye = np.eye(args.n)
        tail = max(operator_norm(tr.final.rep[f"{x}{i}"] - eye)
                   for i in range(2, args.genus + 1) for x in "ab")
        print(f"  seed {seed}: {len(tr.samples)} samples  max defect/eps {tr.defects().max() / eps:.3f}  "
              f"final defect {tr.final.defect:.4f}  handles 2.. off identity by {tail:.1e}")


if __name__ == "__main__":
    main()
