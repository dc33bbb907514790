from __future__ import annotations

import math

import numpy as np
import pytest

from maeigen.domain_grid import ConvexDomain, MeasureSpec, discretize
from maeigen.errors import ZeroFunction
from maeigen.functionals import cegrell_check, energy, mass_integral, rayleigh
from maeigen.ma_operator import (
    GridFunction,
    compare_solutions,
    cone_interpolant,
    ma_apply,
    random_convex_function,
    solve_dirichlet,
)


@pytest.fixture(scope="module")
def fine_interval_grid():
    return discretize(ConvexDomain.interval(0.0, 1.0), 1 / 1024)


@pytest.fixture(scope="module")
def disc_grid_64(unit_disc):
    return discretize(unit_disc, 1 / 64)


def _energy_by_loops(u: GridFunction) -> float:
    """Energy recomputed node by node straight from the stencil arrays."""
    grid = u.grid
    total = 0.0
    for i in range(grid.n_nodes):
        best = math.inf
        for pair in grid.pairs:
            prod = 1.0
            for j in pair:
                ends = []
                for s in (0, 1):
                    nbr = grid.neighbor[i, j, s]
                    ends.append((u.values[nbr] if nbr >= 0 else 0.0, grid.arm[i, j, s] * grid.step_lengths[j]))
                (uf, af), (ub, ab) = ends
                delta = 2.0 / (af + ab) * ((uf - u.values[i]) / af + (ub - u.values[i]) / ab)
                prod *= max(delta, 0.0)
            best = min(best, prod)
        total += -u.values[i] * best
    return total * grid.cell_volume


def test_zero_function(disc_grid_16) -> None:
    zero = GridFunction(disc_grid_16, np.zeros(disc_grid_16.n_nodes))
    assert energy(zero) == 0.0
    assert mass_integral(zero, MeasureSpec.lebesgue()) == 0.0
    with pytest.raises(ZeroFunction):
        rayleigh(zero, MeasureSpec.lebesgue())


def test_sine_functionals(fine_interval_grid) -> None:
    grid = fine_interval_grid
    u = GridFunction.from_function(grid, lambda p: -np.sin(np.pi * p[:, 0]))
    report = rayleigh(u, MeasureSpec.lebesgue())
    assert report.E == pytest.approx(math.pi**2 / 2, rel=1e-3)
    assert report.I == pytest.approx(0.5, abs=1e-4)
    assert report.R == pytest.approx(math.pi**2, rel=1e-5)
    assert report.lambda_hat == pytest.approx(report.R)


def test_paraboloid_mass_integral(disc_grid_64) -> None:
    u = GridFunction.from_function(disc_grid_64, lambda p: 0.5 * (np.sum(p**2, axis=1) - 1.0))
    # closed form: 2 pi int_0^1 ((1 - r^2)/2)^3 r dr = pi/32
    assert mass_integral(u, MeasureSpec.lebesgue()) == pytest.approx(math.pi / 32, rel=0.01)


def test_energy_matches_direct_summation(disc_grid_16) -> None:
    u = random_convex_function(disc_grid_16, seed=8)
    assert energy(u) == pytest.approx(_energy_by_loops(u), rel=1e-10)


@pytest.mark.parametrize("c", [0.25, 3.0])
def test_functionals_are_homogeneous(disc_grid_16, c: float) -> None:
    u = random_convex_function(disc_grid_16, seed=2)
    nu = MeasureSpec.lebesgue()
    assert energy(u.scaled(c)) == pytest.approx(c**3 * energy(u), rel=1e-12)
    assert mass_integral(u.scaled(c), nu) == pytest.approx(c**3 * mass_integral(u, nu), rel=1e-12)
    assert rayleigh(u.scaled(c), nu).R == pytest.approx(rayleigh(u, nu).R, rel=1e-12)


def test_energy_is_order_reversing(disc_grid_32) -> None:
    rng = np.random.default_rng(13)
    g1 = rng.uniform(0.5, 1.0, disc_grid_32.n_nodes)
    report = compare_solutions(disc_grid_32, g1, g1 + rng.uniform(0.0, 1.0, disc_grid_32.n_nodes))
    assert energy(report.u1) <= energy(report.u2) * 1.05


def test_cegrell_identity_has_unit_slack(disc_grid_16) -> None:
    u = random_convex_function(disc_grid_16, seed=1)
    assert cegrell_check(u, u).slack == 1.0


def test_cegrell_is_cauchy_schwarz_in_1d() -> None:
    grid = discretize(ConvexDomain.interval(0.0, 1.0), 1 / 128)
    for seed in range(5):
        u = random_convex_function(grid, seed)
        v = random_convex_function(grid, seed + 100)
        assert cegrell_check(u, v).slack <= 1.0 + 1e-12


def test_cegrell_paraboloid_against_cone(disc_grid_64) -> None:
    u = GridFunction.from_function(disc_grid_64, lambda p: 0.5 * (np.sum(p**2, axis=1) - 1.0))
    report = cegrell_check(u, cone_interpolant(disc_grid_64))
    assert 0 < report.slack <= 1.05


def test_cegrell_on_random_pairs(disc_grid_32) -> None:
    samples = [random_convex_function(disc_grid_32, seed) for seed in range(6)]
    for u, v in zip(samples, samples[1:]):
        assert cegrell_check(u, v).slack <= 1.05


def test_rayleigh_is_bounded_below_by_the_eigenvalue() -> None:
    """In 1D the scheme is linear on convex functions, so the bound is exact."""
    grid = discretize(ConvexDomain.interval(0.0, 1.0), 1 / 128)
    discrete_lambda = (2 / grid.h * math.sin(math.pi * grid.h / 2)) ** 2
    for seed in range(5):
        u = random_convex_function(grid, seed)
        assert rayleigh(u, MeasureSpec.lebesgue()).R >= discrete_lambda * (1 - 1e-9)


def test_rayleigh_reuses_operator_values(disc_grid_16) -> None:
    u = solve_dirichlet(disc_grid_16, 1.0)
    values = ma_apply(u).values
    assert rayleigh(u, 1.0, values) == rayleigh(u, MeasureSpec.lebesgue())
