from __future__ import annotations

import math

import numpy as np
import pytest

from maeigen.config import BracketOptions, PicardOptions
from maeigen.continuation import (
    SemilinearSpec,
    is_lions_subsolution,
    lions_bracket,
    lions_member,
    solve_semilinear,
)
from maeigen.domain_grid import ConvexDomain, MeasureSpec, discretize
from maeigen.eigen_iteration import inverse_iterate
from maeigen.errors import AllSubcritical, AllSupercritical, InvalidSpec, NegativeDensity, NonConvergence
from maeigen.ma_operator import ma_apply, solve_dirichlet

LEBESGUE = MeasureSpec.lebesgue()


@pytest.fixture(scope="module")
def interval_64():
    return discretize(ConvexDomain.interval(0.0, 1.0), 1 / 64)


@pytest.fixture(scope="module")
def interval_bracket():
    grid = discretize(ConvexDomain.interval(0.0, 1.0), 1 / 256)
    return lions_bracket(grid, LEBESGUE)


# ── semilinear solve ────────────────────────────────────────────────────

def test_zero_right_hand_side(interval_64) -> None:
    result = solve_semilinear(interval_64, LEBESGUE, SemilinearSpec.from_text("0"))
    assert result.converged
    assert result.u.sup_norm <= 1e-8


def test_constant_right_hand_side(interval_64) -> None:
    result = solve_semilinear(interval_64, LEBESGUE, SemilinearSpec.from_text("1"))
    x = interval_64.nodes[:, 0]
    np.testing.assert_allclose(result.u.values, (x**2 - x) / 2, atol=1e-9)
    assert result.u.values[31] == pytest.approx(-0.125)


def test_subcritical_lions_member_converges_monotonically(interval_64) -> None:
    spec = SemilinearSpec.from_text(f"1 - {0.5 * math.pi**2}*t", lipschitz_down=0.5 * math.pi**2)
    result = solve_semilinear(interval_64, LEBESGUE, spec, keep_iterates=True)
    assert result.converged
    assert result.residual < 1e-6
    for before, after in zip(result.iterates, result.iterates[1:]):
        assert np.all(after.values <= before.values + 1e-8)


def test_lipschitz_bound_must_stay_below_the_eigenvalue(interval_64) -> None:
    spec = SemilinearSpec.from_text("1 - 20*t", lipschitz_down=20.0)
    with pytest.raises(InvalidSpec):
        solve_semilinear(interval_64, LEBESGUE, spec, lambda_estimate=math.pi**2)


def test_declared_lipschitz_bound_is_spot_checked(interval_64) -> None:
    with pytest.raises(InvalidSpec):
        solve_semilinear(interval_64, LEBESGUE, SemilinearSpec.from_text("1 - 2*t", lipschitz_down=0.0))


def test_negative_right_hand_side(interval_64) -> None:
    with pytest.raises(NegativeDensity):
        solve_semilinear(interval_64, LEBESGUE, SemilinearSpec.from_text("-1 + t"))


def test_supercritical_family_does_not_settle(interval_64) -> None:
    spec = SemilinearSpec.lions(2 * math.pi**2)
    with pytest.raises(NonConvergence) as info:
        solve_semilinear(interval_64, LEBESGUE, spec, PicardOptions(max_iter=200))
    assert "lambda0 may exceed lambda1" in str(info.value)


def test_bad_lions_preset() -> None:
    with pytest.raises(InvalidSpec):
        SemilinearSpec.from_text("lions:abc")


# ── Lions bracket ───────────────────────────────────────────────────────

def test_lambda_zero_member_is_the_plain_solution(interval_64) -> None:
    density = LEBESGUE.density(interval_64)
    member = lions_member(interval_64, density, 0.0)
    assert member.converged
    np.testing.assert_array_equal(member.u.values, solve_dirichlet(interval_64, density).values)


def test_interval_bracket_contains_pi_squared(interval_bracket) -> None:
    bracket = interval_bracket
    assert bracket.lambda_lo <= math.pi**2 <= bracket.lambda_hi
    assert bracket.lambda_hi - bracket.lambda_lo <= 0.02 * bracket.lambda_hi
    assert bracket.subsolution_checked


def test_sup_norm_curve_grows_then_blows_up(interval_bracket) -> None:
    curve = interval_bracket.sup_norm_curve
    finite = [p for p in curve if math.isfinite(p.sup_norm)]
    assert [p.lam for p in curve] == sorted(p.lam for p in curve)
    for before, after in zip(finite, finite[1:]):
        assert after.sup_norm >= before.sup_norm * (1 - 1e-2)
    assert all(p.lam > interval_bracket.lambda_lo for p in curve if math.isinf(p.sup_norm))


def test_bracket_witness_is_convex(interval_bracket) -> None:
    witness = interval_bracket.witness_lo
    assert witness.values.max() <= 0
    assert ma_apply(witness).convexity_defect >= -1e-8


def test_all_subcritical(interval_64) -> None:
    with pytest.raises(AllSubcritical):
        lions_bracket(interval_64, LEBESGUE, BracketOptions(lambda_max=1.0))


def test_all_supercritical(interval_64) -> None:
    with pytest.raises(AllSupercritical):
        lions_bracket(interval_64, LEBESGUE, BracketOptions(lambda_max=200.0, bisect_tol=0.5))


def test_disc_bracket_agrees_with_inverse_iteration(disc_grid_16) -> None:
    eigen = inverse_iterate(disc_grid_16, LEBESGUE)
    bracket = lions_bracket(disc_grid_16, LEBESGUE, BracketOptions(bisect_tol=0.02, tol=1e-6, max_iter=1500))
    assert bracket.lambda_lo <= eigen.lambda_hat <= bracket.lambda_hi


def test_converged_member_is_a_lions_subsolution(interval_64) -> None:
    density = LEBESGUE.density(interval_64)
    member = lions_member(interval_64, density, 5.0)
    assert member.converged and member.subcritical
    assert is_lions_subsolution(member.u, LEBESGUE, 5.0, tol=1e-5)
    assert not is_lions_subsolution(member.u, LEBESGUE, 8.0, tol=1e-5)
