#!/usr/bin/env python3
"""
Alexandrov cone - exact Monge-Ampere measure of a piecewise-linear convex function.

Features shown:
  - Vertices of max-of-affine functions and their subgradient cells
  - Total mass equals the area of the convex hull of the gradients
  - Degenerate inputs reported instead of silently mis-measured
"""
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from maeigen import ConvexDomain, DegeneratePosition, PLConvexFunction, oracle_pl_ma  # noqa: E402


def main() -> None:
    disc = ConvexDomain.disc(0.0, 0.0, 1.0)
    for pieces in (4, 16, 64, 256):
        atoms = oracle_pl_ma(PLConvexFunction.cone(pieces), disc)
        polygon = pieces / 2 * math.sin(2 * math.pi / pieces)
        print(f"🔺 {pieces:>3d} pieces: {len(atoms.points)} atom(s), mass = {atoms.total_mass:.12f} "
              f"(polygon {polygon:.12f}, pi = {math.pi:.12f})")

    flat = PLConvexFunction(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]), np.array([0.0, 0.0, 0.0, -1.0]))
    try:
        oracle_pl_ma(flat, ConvexDomain.box(-5.0, -5.0, 5.0, 5.0))
    except DegeneratePosition as exc:
        print(f"\n⚠️  degenerate input rejected: {exc}")


if __name__ == "__main__":
    main()
