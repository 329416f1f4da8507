"""Regime scan over the reduced system's parameter space.

Runs the 20 x 20 seed grid at each candidate (m, n, p, k) and prints the class
counts and a character map of the grid (r regular, c chaotic, u unclassified,
l lost, e escaped).  The shipped params.json was picked from this output.
"""
from __future__ import annotations

import argparse
import collections
import time

from carnot_sr.poincare import ReducedParams, ScanConfig, scan, seed_grid

CANDIDATES = [
    (-1.0, -4.0, 0.0, 0.1),
    (-1.0, -4.0, 0.0, 2.0),
    (-1.0, -1.0, 0.0, 0.1),
    (-2.0, -1.0, 0.5, 0.2),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=10_000)
    ap.add_argument("--n", type=int, default=20, help="seeds per axis")
    ap.add_argument("--box", type=float, default=4.0)
    args = ap.parse_args()
    seeds = seed_grid((-args.box, args.box), (-args.box, args.box), args.n, args.n)
    for m, n, p, k in CANDIDATES:
        t0 = time.time()
        recs = scan([ReducedParams(m, n, p, k)], seeds, ScanConfig(iters=args.iters))
        counts = collections.Counter(r.klass for r in recs)
        print(f"(m, n, p, k) = ({m}, {n}, {p}, {k}): {dict(counts)} in {time.time() - t0:.0f}s")
        rows = ["".join(recs[j * args.n + i].klass[0] for i in range(args.n)) for j in range(args.n)]
        print("\n".join(reversed(rows)))


if __name__ == "__main__":
    main()
