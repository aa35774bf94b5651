"""Defect, winding and trace-obstruction numbers for the Voiculescu family.

    python scripts/voiculescu_sweep.py --n-max 128 --eps-prime 0.01
"""

import argparse
import csv
import sys

import numpy as np

from aga.almostrep import max_defect, voiculescu_family, voiculescu_matrices
from aga.invariants import halfplane_count, spectral_lacuna, trace_obstruction, try_winding


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-min", type=int, default=3)
    ap.add_argument("--n-max", type=int, default=64)
    ap.add_argument("--eps-prime", type=float, default=0.01)
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "defect", "winding", "lacuna", "halfplane_b", "N_count", "upper_bound", "trace_abs",
                "max_diag_term", "anticommute_residual"])
    for n in range(args.n_min, args.n_max + 1):
        a, b, c = voiculescu_matrices(n)
        rep = trace_obstruction(a, b, n, 0, args.eps_prime)
        w.writerow([
            n,
            f"{max_defect(voiculescu_family(n)):.12g}",
            try_winding(a, c),
            f"{spectral_lacuna(a)[0]:.12g}",
            halfplane_count(b).count,
            rep.N_count,
            rep.upper_bound,
            f"{rep.trace_abs:.3g}",
            f"{rep.max_diag_term:.6g}",
            f"{rep.anticommute_residual:.6g}",
        ])
    # the defect closes in on zero while the winding stays pinned at one
    print(f"# 2 sin(pi/n) at n={args.n_max}: {2 * np.sin(np.pi / args.n_max):.6g}", file=sys.stderr)


if __name__ == "__main__":
    main()
