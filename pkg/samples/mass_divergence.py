#!/usr/bin/env python3
"""
Mass divergence - discrete mass of -(-u)^alpha under grid refinement.

For alpha < 1 the transformed function has infinite Monge-Ampere mass near
the boundary; the discrete total keeps growing as h shrinks.
"""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from maeigen import ConvexDomain, MeasureSpec, mass_divergence_probe  # noqa: E402


def main() -> None:
    disc = ConvexDomain.disc(0.0, 0.0, 1.0)
    h_list = [1 / 16, 1 / 32, 1 / 64]
    for alpha in (0.5, 0.75, 1.0):
        rows = mass_divergence_probe(disc, MeasureSpec.lebesgue(), alpha, h_list)
        ratios = ", ".join("-" if r.ratio is None else f"{r.ratio:.3f}" for r in rows)
        print(f"📈 alpha = {alpha:<5g} masses = {[round(r.mass, 4) for r in rows]}  ratios = {ratios}")


if __name__ == "__main__":
    main()
