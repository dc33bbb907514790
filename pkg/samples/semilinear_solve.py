#!/usr/bin/env python3
"""
Semilinear solve - M(u) = F(x, u)^n nu with a user formula for F.

Features shown:
  - Formulas in x, y, r and t compiled through a whitelist
  - Declared Lipschitz bound, spot-checked before iterating
  - Monotone Picard iterates from u_0 = 0
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from maeigen import ConvexDomain, MeasureSpec, SemilinearSpec, discretize, solve_semilinear  # noqa: E402
from maeigen.errors import MAEigenError  # noqa: E402

CASES = [
    ("1 + x**2", 0.0),
    ("exp(-r) * (1 - 3*t)", 3.0),
    ("lions:2", 2.0),
]


def main() -> None:
    grid = discretize(ConvexDomain.disc(0.0, 0.0, 1.0), 1 / 32)
    for text, lipschitz in CASES:
        spec = SemilinearSpec.from_text(text, lipschitz_down=lipschitz)
        try:
            result = solve_semilinear(grid, MeasureSpec.lebesgue(), spec)
        except MAEigenError as exc:
            print(f"❌ F = {text}: {exc}")
            continue
        print(f"✅ F = {text:<22s} steps = {result.iterations:<4d} "
              f"min u = {result.u.values.min():.6f}  residual = {result.residual:.2e}")


if __name__ == "__main__":
    main()
