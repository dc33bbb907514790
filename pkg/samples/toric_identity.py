#!/usr/bin/env python3
"""
Toric identity - a convex function of one variable against its radial lift.

Features shown:
  - int chi u'' on (a, b) via scipy quadrature
  - The same mass from ddc of u(log|z|) on an annulus
  - Observed convergence order of the polar discretization
"""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from maeigen.oracles import DDC_NORMALIZATION, calibrate_ddc, toric_check_1d, toric_convergence  # noqa: E402


def main() -> None:
    print(f"🔧 ddc normalization {DDC_NORMALIZATION:.12f}, calibrated {calibrate_ddc():.12f}\n")

    cases = {
        "x^2": lambda x: x**2,
        "exp(x)": np.exp,
        "x^4": lambda x: x**4,
    }
    for name, u in cases.items():
        report = toric_check_1d(u, np.ones_like)
        print(f"  u = {name:<7s} 1D = {report.rhs:.8f}  annulus = {report.lhs:.8f}  diff = {report.abs_diff:.2e}")

    _, order = toric_convergence(lambda x: x**2, np.ones_like)
    print(f"\n📊 observed order under refinement: {order:.2f}")


if __name__ == "__main__":
    main()
