"""Semilinear Dirichlet problems ``M(u) = F(x, u)^n nu`` and the Lions bracket.

Both run the same Picard iteration from ``u_0 = 0``: each step solves a
plain Dirichlet problem with the right-hand side frozen at the previous
iterate. For ``F = 1 - lambda t`` the iterates decrease nodewise; they
settle for ``lambda`` below the first eigenvalue and blow up above it, which
is what :func:`lions_bracket` bisects on.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from maeigen.config import BracketOptions, PicardOptions, SolverOptions
from maeigen.domain_grid import Grid, MeasureSpec
from maeigen.errors import AllSubcritical, AllSupercritical, InvalidSpec, NegativeDensity, NonConvergence
from maeigen.expressions import compile_expression
from maeigen.functionals import rayleigh
from maeigen.ma_operator import GridFunction, dirichlet_solve_report, ma_apply, solve_dirichlet

logger = logging.getLogger(__name__)

SemilinearF = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SemilinearSpec:
    """Right-hand side ``F(x, t)`` for ``t <= 0`` with ``dF/dt >= -lipschitz_down``."""

    F: SemilinearF
    lipschitz_down: float = 0.0
    text: str = ""

    @classmethod
    def from_text(cls, text: str, lipschitz_down: float = 0.0) -> SemilinearSpec:
        """Formula in ``x, y, r, t`` or the preset ``lions:<lambda>`` for ``1 - lambda t``."""
        if text.startswith("lions:"):
            try:
                lam = float(text.split(":", 1)[1])
            except ValueError as exc:
                raise InvalidSpec(f"bad lions preset {text!r}") from exc
            return cls.lions(lam)
        expr = compile_expression(text)
        return cls(F=lambda points, t: expr(points, t), lipschitz_down=lipschitz_down, text=text)

    @classmethod
    def lions(cls, lam: float) -> SemilinearSpec:
        return cls(F=lambda points, t: 1.0 - lam * np.asarray(t), lipschitz_down=lam, text=f"1 - {lam!r}*t")

    def evaluate(self, points: np.ndarray, t: np.ndarray) -> np.ndarray:
        values = np.broadcast_to(np.asarray(self.F(points, t), dtype=float), (len(points),))
        if not np.all(np.isfinite(values)):
            raise InvalidSpec(f"F = {self.text or 'callback'} is not finite")
        if np.any(values < 0):
            worst = int(np.argmin(values))
            raise NegativeDensity(f"F is negative at node {worst} ({values[worst]:.3e}, t={np.asarray(t).flat[worst]:.3e})")
        return values

    def spot_check(self, grid: Grid, t_floor: float = -1.0, samples: int = 100, seed: int = 0) -> float:
        """Smallest sampled slope ``dF/dt`` (central differences); raise if below the declared bound."""
        rng = np.random.default_rng(seed)
        points = grid.nodes[rng.integers(0, grid.n_nodes, size=samples)]
        t = rng.uniform(t_floor, 0.0, size=samples)
        delta = 1e-6 * max(1.0, abs(t_floor))
        slopes = (np.asarray(self.F(points, t + delta)) - np.asarray(self.F(points, t - delta))) / (2 * delta)
        worst = float(np.min(slopes))
        allowed = -self.lipschitz_down * 1.05 - 1e-9
        if worst < allowed:
            raise InvalidSpec(
                f"sampled dF/dt = {worst:.4g} is below the declared -lipschitz_down = {-self.lipschitz_down:.4g}"
            )
        return worst


@dataclass
class PicardResult:
    u: GridFunction
    iterations: int
    converged: bool
    subcritical: bool
    residual: float
    sup_norms: list[float] = field(default_factory=list)
    iterates: list[GridFunction] = field(default_factory=list)
    last_ratio: float = float("nan")


@dataclass(frozen=True)
class CurvePoint:
    lam: float
    sup_norm: float
    converged: bool


@dataclass(frozen=True)
class BracketResult:
    lambda_lo: float
    lambda_hi: float
    witness_lo: GridFunction
    sup_norm_curve: list[CurvePoint]
    subsolution_checked: bool = True


# ── Picard ──────────────────────────────────────────────────────────────

def _rhs(grid: Grid, spec: SemilinearSpec, u: np.ndarray, density: np.ndarray) -> np.ndarray:
    return spec.evaluate(grid.nodes, u) ** grid.dimension * density


def picard_iterate(
    grid: Grid,
    density: np.ndarray,
    spec: SemilinearSpec,
    tol: float,
    max_iter: int,
    growth_guard: float,
    patience: int,
    solver: SolverOptions | None = None,
    keep_iterates: bool = False,
) -> PicardResult:
    """Picard iteration from zero; classifies the run as settling or blowing up.

    A run is called blown up once its sup norm exceeds ``growth_guard`` times
    the first iterate's and the step lengths have stopped shrinking for
    ``patience`` consecutive steps.
    """
    solver = solver or SolverOptions()
    u = GridFunction(grid, np.zeros(grid.n_nodes))
    iterates = [u] if keep_iterates else []
    norms: list[float] = []
    base = 0.0
    prev_diff = math.inf
    ratio = math.nan
    streak = 0
    for j in range(1, max_iter + 1):
        rhs = _rhs(grid, spec, u.values, density)
        # residual tolerance relative to the size of the right-hand side
        inner = solver.model_copy(update={"tol": solver.tol * max(1.0, float(np.max(rhs)))})
        try:
            solved = dirichlet_solve_report(grid, rhs, options=inner, initial=u if j > 1 else None)
        except NonConvergence:
            if base > 0 and u.sup_norm > growth_guard * base:
                logger.debug("picard %d: inner solve failed on a blown-up iterate", j)
                return PicardResult(u, j, False, False, math.inf, norms, iterates, ratio)
            raise
        w = solved.u
        diff = float(np.max(np.abs(w.values - u.values)))
        norm = w.sup_norm
        norms.append(norm)
        if keep_iterates:
            iterates.append(w)
        if j == 1:
            base = norm
        else:
            ratio = diff / prev_diff if prev_diff > 0 else math.inf
            streak = streak + 1 if ratio >= 1.0 else 0
        logger.debug("picard %d: sup_norm=%.6g diff=%.3e ratio=%.4f", j, norm, diff, ratio)
        u = w
        if diff <= tol * max(1.0, norm):
            residual = float(np.max(np.abs(ma_apply(u).values - _rhs(grid, spec, u.values, density))))
            return PicardResult(u, j, True, True, residual, norms, iterates, ratio)
        blown = base > 0 and norm > growth_guard * base
        if blown and (streak >= patience or norm > 1e6 * growth_guard * base):
            return PicardResult(u, j, False, False, math.inf, norms, iterates, ratio)
        prev_diff = diff

    residual = float(np.max(np.abs(ma_apply(u).values - _rhs(grid, spec, u.values, density))))
    return PicardResult(u, max_iter, False, bool(ratio < 1.0), residual, norms, iterates, ratio)


def solve_semilinear(
    grid: Grid,
    nu: MeasureSpec,
    spec: SemilinearSpec,
    options: PicardOptions | None = None,
    solver: SolverOptions | None = None,
    lambda_estimate: float | None = None,
    keep_iterates: bool = False,
) -> PicardResult:
    """Solve ``M(u) = F(x, u)^n nu`` with zero boundary data by Picard iteration."""
    options = options or PicardOptions()
    if lambda_estimate is not None and not spec.lipschitz_down < lambda_estimate:
        raise InvalidSpec(
            f"lipschitz_down = {spec.lipschitz_down:g} must stay below the eigenvalue estimate {lambda_estimate:g}"
        )
    density = nu.density(grid)
    spec.spot_check(grid)
    result = picard_iterate(
        grid,
        density,
        spec,
        tol=options.tol,
        max_iter=options.max_iter,
        growth_guard=options.growth_guard,
        patience=options.patience,
        solver=solver,
        keep_iterates=keep_iterates,
    )
    if not result.converged:
        growing = len(result.sup_norms) > 1 and result.sup_norms[-1] > result.sup_norms[0]
        raise NonConvergence(
            "Picard iteration did not settle",
            residual=result.residual,
            iterations=result.iterations,
            hint="lambda0 may exceed lambda1" if growing else "",
        )
    logger.info("semilinear solve converged in %d steps, sup_norm=%.6g", result.iterations, result.u.sup_norm)
    return result


# ── Lions bracket ───────────────────────────────────────────────────────

def lions_member(
    grid: Grid,
    density: np.ndarray,
    lam: float,
    options: BracketOptions | None = None,
    solver: SolverOptions | None = None,
) -> PicardResult:
    """Picard run for ``M(u) = (1 - lam u)^n nu``."""
    options = options or BracketOptions()
    return picard_iterate(
        grid,
        density,
        SemilinearSpec.lions(lam),
        tol=options.tol,
        max_iter=options.max_iter,
        growth_guard=options.growth_guard,
        patience=options.patience,
        solver=solver,
    )


def is_lions_subsolution(u: GridFunction, nu: MeasureSpec | np.ndarray, lam: float, tol: float = 1e-6) -> bool:
    """``M(u) >= (1 - lam u)^n nu - tol`` at every node."""
    density = nu.density(u.grid) if isinstance(nu, MeasureSpec) else np.asarray(nu, dtype=float)
    n = u.grid.dimension
    target = (1.0 - lam * u.values) ** n * density
    return bool(np.all(ma_apply(u).values >= target - tol * np.maximum(1.0, target)))


def lions_bracket(
    grid: Grid,
    nu: MeasureSpec,
    options: BracketOptions | None = None,
    solver: SolverOptions | None = None,
) -> BracketResult:
    """Bisect on ``lambda`` between settling and blowing-up members of the Lions family."""
    options = options or BracketOptions()
    solver = solver or SolverOptions()
    density = nu.density(grid)
    curve: dict[float, CurvePoint] = {}
    checked = True

    def attempt(lam: float) -> PicardResult:
        nonlocal checked
        result = lions_member(grid, density, lam, options, solver)
        sup = result.u.sup_norm if result.subcritical else math.inf
        curve[lam] = CurvePoint(lam, sup, result.converged)
        if result.subcritical and result.converged:
            checked = checked and is_lions_subsolution(result.u, density, lam, tol=1e-5)
        logger.info(
            "lions member lambda=%.6g: %s after %d steps (sup_norm=%.6g)",
            lam,
            "subcritical" if result.subcritical else "supercritical",
            result.iterations,
            result.u.sup_norm,
        )
        return result

    zero = attempt(0.0)
    lambda_max = options.lambda_max
    if lambda_max is None:
        lambda_max = 2.0 * rayleigh(zero.u, density).R ** (1.0 / grid.dimension)
    top = attempt(lambda_max)
    if top.subcritical:
        raise AllSubcritical(f"lambda_max = {lambda_max:g} is still subcritical; raise lambda_max")
    small = options.bisect_tol * lambda_max
    first = attempt(small)
    if not first.subcritical:
        raise AllSupercritical(f"lambda = {small:g} already blows up; check the scaling of nu")
    lo, witness, hi = small, first.u, lambda_max

    while hi - lo > options.bisect_tol * hi:
        mid = 0.5 * (lo + hi)
        result = attempt(mid)
        if result.subcritical:
            lo, witness = mid, result.u
        else:
            hi = mid

    points = [curve[k] for k in sorted(curve)]
    return BracketResult(lambda_lo=lo, lambda_hi=hi, witness_lo=witness, sup_norm_curve=points, subsolution_checked=checked)
