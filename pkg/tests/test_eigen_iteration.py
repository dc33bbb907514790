from __future__ import annotations

import math

import numpy as np
import pytest

from maeigen.config import EigenOptions
from maeigen.domain_grid import ConvexDomain, MeasureSpec, discretize
from maeigen.eigen_iteration import (
    IterationTrace,
    TraceStep,
    certify_monotone,
    inverse_iterate,
    inverse_step,
    monotonicity_violations,
    proportionality,
    subsolution_bound,
)
from maeigen.errors import DegenerateStart, GridError, InvalidSpec, ZeroFunction
from maeigen.functionals import rayleigh
from maeigen.ma_operator import GridFunction, cone_interpolant, random_convex_function, solve_dirichlet
from maeigen.oracles import RadialProblem, oracle_radial

LEBESGUE = MeasureSpec.lebesgue()


def _trace(
    rs: list[float],
    es: list[float] | None = None,
    slacks: list[float | None] | None = None,
    dimension: int = 1,
) -> IterationTrace:
    trace = IterationTrace(dimension=dimension)
    es = es or [1.0 + 1e-3 * k for k in range(len(rs))]
    slacks = slacks or [None] * len(rs)
    for k, (r, e, s) in enumerate(zip(rs, es, slacks)):
        trace.append(TraceStep(k, e, e / r, r, r, None, None, 1.0, s))
    return trace


@pytest.fixture(scope="module")
def interval_grid():
    return discretize(ConvexDomain.interval(0.0, 1.0), 1 / 1024)


@pytest.fixture(scope="module")
def interval_result(interval_grid):
    return inverse_iterate(interval_grid, LEBESGUE)


@pytest.fixture(scope="module")
def disc_result():
    grid = discretize(ConvexDomain.disc(0.0, 0.0, 1.0), 1 / 64)
    return inverse_iterate(grid, LEBESGUE)


# ── 1D ──────────────────────────────────────────────────────────────────

def test_interval_eigenvalue(interval_grid, interval_result) -> None:
    result = interval_result
    assert result.converged
    assert result.lambda_hat == pytest.approx(math.pi**2, rel=1e-3)
    x = interval_grid.nodes[:, 0]
    np.testing.assert_allclose(result.u.values, -np.sin(np.pi * x), atol=1e-3)
    assert result.certificate_violations == []
    assert result.trace[-1].lambda_hat == pytest.approx(result.lambda_hat, rel=1e-12)
    assert result.lambda_lo <= result.lambda_hat * (1 + 1e-9)


def test_converged_iterate_is_a_fixed_point(interval_result) -> None:
    again = inverse_iterate(interval_result.u.grid, LEBESGUE, interval_result.u, EigenOptions(max_iter=1))
    assert again.trace[1].sup_diff < 1e-6


def test_limit_does_not_depend_on_the_start(interval_grid, interval_result) -> None:
    u0 = GridFunction.from_function(interval_grid, lambda p: -0.5 * np.sin(np.pi * p[:, 0]) - 0.3 * (p[:, 0] - p[:, 0] ** 2))
    other = inverse_iterate(interval_grid, LEBESGUE, u0)
    assert proportionality(interval_result.u, other.u).dev <= 1e-2
    assert other.lambda_hat == pytest.approx(interval_result.lambda_hat, rel=1e-6)


def test_normalization_does_not_change_the_eigenvalue(interval_grid, interval_result) -> None:
    raw = inverse_iterate(interval_grid, LEBESGUE, options=EigenOptions(normalize=False))
    assert raw.lambda_hat == pytest.approx(interval_result.lambda_hat, rel=1e-10)
    assert raw.u.sup_norm == pytest.approx(1.0)


def test_trace_lift_is_monotone(interval_result) -> None:
    e_val, i_val, r_val = interval_result.trace.lifted()
    assert np.all(np.diff(e_val) >= -1e-6 * e_val[:-1])
    assert np.all(np.diff(i_val) >= -1e-6 * i_val[:-1])
    assert np.all(np.diff(r_val) <= 1e-6 * r_val[:-1])


@pytest.mark.parametrize("c", [0.1, 10.0])
@pytest.mark.parametrize("grid_name", ["interval_grid", "disc_grid_16"])
def test_inverse_step_is_scale_equivariant(request, grid_name: str, c: float) -> None:
    grid = request.getfixturevalue(grid_name)
    u = random_convex_function(grid, seed=3)
    density = LEBESGUE.density(grid)
    base = inverse_step(u, density).u
    scaled = inverse_step(u.scaled(c), density).u
    deviation = np.max(np.abs(scaled.values - c * base.values)) / scaled.sup_norm
    assert deviation <= 1e-8


def test_hessian_measure_of_a_solution_matches_its_density() -> None:
    grid = discretize(ConvexDomain.interval(0.0, 1.0), 1 / 64)
    v = solve_dirichlet(grid, 2.0)
    from_hessian = inverse_iterate(grid, MeasureSpec.product_of_hessian(v))
    from_constant = inverse_iterate(grid, MeasureSpec.constant(2.0))
    assert from_hessian.converged
    assert from_hessian.lambda_hat == pytest.approx(from_constant.lambda_hat, rel=1e-6)
    assert from_constant.lambda_hat == pytest.approx(0.5 * (128 * math.sin(math.pi / 128)) ** 2, rel=1e-6)
    other = discretize(ConvexDomain.interval(0.0, 1.0), 1 / 32)
    with pytest.raises(GridError):
        inverse_iterate(other, MeasureSpec.product_of_hessian(v))


def test_degenerate_and_positive_starts(interval_grid) -> None:
    with pytest.raises(DegenerateStart):
        inverse_iterate(interval_grid, LEBESGUE, GridFunction(interval_grid, np.zeros(interval_grid.n_nodes)))
    with pytest.raises(InvalidSpec):
        inverse_iterate(interval_grid, LEBESGUE, GridFunction.from_function(interval_grid, lambda p: p[:, 0]))


def test_subsolution_bound_encloses_the_eigenvalue() -> None:
    grid = discretize(ConvexDomain.interval(0.0, 1.0), 1 / 128)
    discrete_lambda = (2 / grid.h * math.sin(math.pi * grid.h / 2)) ** 2
    for seed in range(4):
        u = random_convex_function(grid, seed)
        assert subsolution_bound(u, LEBESGUE) <= discrete_lambda * (1 + 1e-9)
        assert rayleigh(u, LEBESGUE).lambda_hat >= discrete_lambda * (1 - 1e-9)


# ── certificates ────────────────────────────────────────────────────────

def test_constant_trace_passes() -> None:
    assert certify_monotone(_trace([2.0, 2.0, 2.0], es=[1.0, 1.0, 1.0])) == []


def test_rayleigh_increase_is_flagged() -> None:
    trace = _trace([5.0, 4.0, 3.0, 3.5, 3.2])
    assert certify_monotone(trace) == [3]
    names = {v.quantity for v in monotonicity_violations(trace) if v.index == 3}
    assert "R" in names


def test_tolerance_absorbs_tiny_increases() -> None:
    trace = _trace([5.0, 5.0 * (1 + 1e-9)], es=[1.0, 1.0])
    assert certify_monotone(trace, tol_cert=1e-6) == []
    assert certify_monotone(trace, tol_cert=0.0) == [1]


def test_cegrell_slack_sets_the_allowance() -> None:
    """A step whose pair has slack s may raise R by up to s^(n+1)."""
    rs = [3.0, 3.0 * 1.0001, 3.0 * 1.0001]
    es = [1.0, 1.0001**-0.5, 1.0001**-0.5]
    loose = _trace(rs, es, slacks=[None, 1.0001 ** (1 / 3), 1.0], dimension=2)
    assert certify_monotone(loose) == []
    assert certify_monotone(loose, strict=True) == [1]
    tight = _trace(rs, es, slacks=[None, 1.00001, 1.0], dimension=2)
    assert certify_monotone(tight) == [1]


def test_slack_below_one_keeps_the_plain_check() -> None:
    trace = _trace([5.0, 5.5], es=[1.0, 1.0], slacks=[None, 0.9])
    assert certify_monotone(trace) == [1]


def test_energy_ratio_stays_strict_under_slack() -> None:
    trace = IterationTrace(dimension=2)
    trace.append(TraceStep(0, 1.0, 1.0, 1.0, 1.0, None, None, 1.0))
    trace.append(TraceStep(1, 1.1, 1.0, 1.1, 1.1, None, None, 1.0, 1.5))
    quantities = {v.quantity for v in monotonicity_violations(trace)}
    assert quantities == {"E/I^(1/(n+1))"}


# ── proportionality ─────────────────────────────────────────────────────

def test_proportionality_of_multiples(disc_grid_16) -> None:
    u = random_convex_function(disc_grid_16, seed=6)
    report = proportionality(u, u.scaled(3.0))
    assert report.c == pytest.approx(1 / 3, rel=1e-9)
    assert report.dev <= 1e-12


def test_proportionality_detects_a_bump(disc_result) -> None:
    u = disc_result.u
    grid = u.grid
    bump = -np.clip(1.0 - np.sum((grid.nodes - [0.6, 0.0]) ** 2, axis=1) / 0.3**2, 0.0, None)
    assert proportionality(u, u.with_values(u.values + 0.1 * bump)).dev >= 0.05


def test_proportionality_of_zero(disc_grid_16) -> None:
    zero = GridFunction(disc_grid_16, np.zeros(disc_grid_16.n_nodes))
    with pytest.raises(ZeroFunction):
        proportionality(zero, random_convex_function(disc_grid_16, seed=0))


# ── 2D ──────────────────────────────────────────────────────────────────

def test_disc_eigenvalue_matches_the_radial_oracle(disc_result) -> None:
    reference = oracle_radial(RadialProblem()).lambda1
    assert disc_result.converged
    assert disc_result.lambda_hat == pytest.approx(reference, rel=0.02)
    assert disc_result.certificate_violations == []
    _, i_val, r_val = disc_result.trace.lifted()
    for k in disc_result.strict_violations:
        assert r_val[k] <= r_val[k - 1] * (1 + 1e-3)
        assert i_val[k] >= i_val[k - 1] * (1 - 1e-3)
    assert disc_result.u.values.max() <= 0


def test_disc_limit_does_not_depend_on_the_start(disc_result) -> None:
    grid = disc_result.u.grid
    u0 = cone_interpolant(grid)
    assert proportionality(solve_dirichlet(grid, 1.0), u0).dev >= 0.05
    other = inverse_iterate(grid, LEBESGUE, u0)
    assert proportionality(disc_result.u, other.u).dev <= 1e-2
    assert other.lambda_hat == pytest.approx(disc_result.lambda_hat, rel=1e-3)
