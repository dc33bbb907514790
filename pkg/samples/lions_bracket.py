#!/usr/bin/env python3
"""
Lions bracket - enclose lambda_1 by watching M(u) = (1 - lambda u)^n blow up.

Features shown:
  - Picard continuation in lambda
  - Bisection between settling and blowing-up members
  - The sup-norm curve that diverges at the eigenvalue
"""
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from maeigen import BracketOptions, ConvexDomain, MeasureSpec, discretize, lions_bracket  # noqa: E402


def main() -> None:
    grid = discretize(ConvexDomain.interval(0.0, 1.0), 1 / 128)
    bracket = lions_bracket(grid, MeasureSpec.lebesgue(), BracketOptions(bisect_tol=0.005))

    print(f"✅ lambda_1 in [{bracket.lambda_lo:.6f}, {bracket.lambda_hi:.6f}]  (pi^2 = {math.pi**2:.6f})\n")
    print("  lambda        sup|u|")
    for point in bracket.sup_norm_curve:
        sup = "blow-up" if math.isinf(point.sup_norm) else f"{point.sup_norm:.6g}"
        print(f"  {point.lam:<12.6g}  {sup}")


if __name__ == "__main__":
    main()
