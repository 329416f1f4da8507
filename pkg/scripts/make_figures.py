"""Figure-style SVGs: Poincare orbits for the curated sets and the three projection cases."""
from __future__ import annotations

import argparse
import math
import os

import numpy as np

from carnot_sr import output
from carnot_sr.dynamics import integrate_normal
from carnot_sr.poincare import curated_set, orbit


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="figures")
    ap.add_argument("--iters", type=int, default=20_000)
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)

    par, entry = curated_set("mixed")
    for regime in ("regular", "chaotic"):
        orb = orbit(entry[f"{regime}_seed"], par, args.iters)
        path = os.path.join(args.outdir, f"poincare_{regime}.svg")
        output.atomic_write(path, output.svg_scatter(orb.points, f"{regime} orbit, {len(orb)} returns"))
        print(path)

    cases = {
        "plane": [1.0, 0.0] + [0.0] * 6,
        "heisenberg": [1.0, 0.0, 2.0] + [0.0] * 5,
        "cartan": [1.0, 0.0, 0.4, 0.8, -0.5, 0.0, 0.0, 0.0],
    }
    for name, h in cases.items():
        T = math.pi if name == "heisenberg" else 20.0
        tr = integrate_normal(np.array(h + [0.0] * 8), T, t_eval=np.linspace(0.0, T, 2001))
        path = os.path.join(args.outdir, f"projection_{name}.svg")
        output.atomic_write(path, output.svg_polylines([tr.q[:, :2]], f"{name} projection"))
        print(path)


if __name__ == "__main__":
    main()
