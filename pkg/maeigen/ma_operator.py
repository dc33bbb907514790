"""Discrete real Monge-Ampere operator and the Dirichlet solver ``M(u) = g``.

The operator is the monotone wide-stencil form

    M(u)(x) = min over pairs (v, v_perp) of  prod_j max(Delta_j u(x), 0)

with unequal-arm second differences near the boundary (1D: the single
clamped second difference). Two engines solve ``M(u) = g``:

* ``sweep``  -- symmetric nonlinear Gauss-Seidel, robust, O(h^-2) sweeps;
* ``newton`` -- damped Newton on the active direction pair, falling back to
  ``sweep`` (with a warning) when the line search or the linear solve fails.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from maeigen._kernels import symmetric_sweeps
from maeigen.config import SolverOptions
from maeigen.domain_grid import Grid
from maeigen.errors import GridError, InvalidSpec, NegativeDensity, NonConvergence

logger = logging.getLogger(__name__)

BoundaryData = Callable[[np.ndarray], np.ndarray]

_CLAMP_FLOOR = 1e-14


# ── Types ───────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values at the interior nodes of ``grid``; ``boundary_data`` of ``None`` means zero."""

    grid: Grid
    values: np.ndarray
    boundary_data: BoundaryData | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape != (self.grid.n_nodes,):
            raise GridError(f"expected {self.grid.n_nodes} node values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise GridError("grid function has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls,
        grid: Grid,
        f: Callable[[np.ndarray], np.ndarray],
        boundary_data: BoundaryData | None = None,
    ) -> GridFunction:
        return cls(grid, np.asarray(f(grid.nodes), dtype=float).reshape(-1), boundary_data)

    @cached_property
    def boundary_values(self) -> np.ndarray:
        return self.grid.boundary_values(self.boundary_data)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values: np.ndarray) -> GridFunction:
        return GridFunction(self.grid, values, self.boundary_data)

    def scaled(self, c: float) -> GridFunction:
        data = self.boundary_data
        scaled_data = None if data is None else (lambda p: c * np.asarray(data(p)))
        return GridFunction(self.grid, c * self.values, scaled_data)

    def __neg__(self) -> GridFunction:
        return self.scaled(-1.0)


@dataclass(frozen=True)
class DiscreteMAResult:
    """``values`` per node, ``witness`` the minimizing pair index, ``defect`` the min second difference."""

    values: np.ndarray
    witness: np.ndarray
    defect: np.ndarray
    second_differences: np.ndarray

    @property
    def convexity_defect(self) -> float:
        """Most negative second difference anywhere (``>= 0`` for grid-convex input)."""
        return float(self.defect.min())


@dataclass(frozen=True)
class SolveReport:
    u: GridFunction
    residual: float
    iterations: int
    policy: str
    fell_back: bool = False


# ── Operator ────────────────────────────────────────────────────────────

def second_differences(u: GridFunction) -> np.ndarray:
    """``(N, D)`` centered second differences with shortened boundary arms."""
    grid = u.grid
    wf, wb = grid.coefficients
    nbr = grid.neighbor
    bvals = u.boundary_values
    vals = u.values
    uf = np.where(nbr[..., 0] >= 0, vals[nbr[..., 0]], bvals[..., 0])
    ub = np.where(nbr[..., 1] >= 0, vals[nbr[..., 1]], bvals[..., 1])
    return wf * (uf - vals[:, None]) + wb * (ub - vals[:, None])


def _min_of_products(grid: Grid, delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    clamped = np.maximum(delta, 0.0)
    products = np.prod(clamped[:, grid.pairs], axis=2)
    witness = np.argmin(products, axis=1)
    return products[np.arange(grid.n_nodes), witness], witness


def ma_apply(u: GridFunction) -> DiscreteMAResult:
    """Discrete Monge-Ampere density of ``u`` at every interior node."""
    delta = second_differences(u)
    values, witness = _min_of_products(u.grid, delta)
    return DiscreteMAResult(values=values, witness=witness, defect=delta.min(axis=1), second_differences=delta)


def total_mass(u: GridFunction) -> float:
    """Total discrete Monge-Ampere mass ``sum M(u) h^n``."""
    return u.grid.integrate(ma_apply(u).values)


# ── Dirichlet solvers ───────────────────────────────────────────────────

def _as_density(grid: Grid, g: np.ndarray | float) -> np.ndarray:
    values = np.broadcast_to(np.asarray(g, dtype=float), (grid.n_nodes,)).copy()
    if not np.all(np.isfinite(values)):
        raise InvalidSpec("right-hand side has non-finite values")
    if np.any(values < 0):
        worst = int(np.argmin(values))
        raise NegativeDensity(f"right-hand side is negative at node {worst} ({values[worst]:.3e})")
    return values


def _residual(u: GridFunction, g: np.ndarray) -> np.ndarray:
    return ma_apply(u).values - g


def _initial_guess(grid: Grid, g: np.ndarray, boundary_values: np.ndarray) -> np.ndarray:
    """Linear solve of ``Delta_0 u = g`` (1D) or ``Delta_0 u + Delta_1 u = 2 sqrt(g)`` (2D)."""
    ops = grid.difference_operators
    const = grid.boundary_part(boundary_values)
    if grid.dimension == 1:
        return spsolve(ops[0].tocsc(), g - const[:, 0])
    a, b = grid.pairs[0]
    return spsolve((ops[a] + ops[b]).tocsc(), 2.0 * np.sqrt(g) - const[:, a] - const[:, b])


def _sweep_solve(
    grid: Grid,
    g: np.ndarray,
    start: GridFunction,
    options: SolverOptions,
) -> SolveReport:
    wf, wb = grid.coefficients
    bvals = start.boundary_values
    work = start.values.copy()
    sweeps = 0
    residual = float(np.max(np.abs(_residual(start, g))))
    while residual > options.tol:
        if sweeps >= options.max_sweeps:
            raise NonConvergence(
                "Gauss-Seidel sweep budget exhausted",
                residual=residual,
                iterations=sweeps,
                hint="increase max_sweeps or use policy='newton'",
            )
        batch = min(options.check_every, options.max_sweeps - sweeps)
        symmetric_sweeps(work, g, grid.neighbor, wf, wb, bvals, grid.pairs, batch)
        sweeps += batch
        residual = float(np.max(np.abs(_residual(start.with_values(work), g))))
        logger.debug("sweep %d residual=%.3e", sweeps, residual)
    return SolveReport(start.with_values(work), residual, sweeps, "sweep")


def _newton_matrix(grid: Grid, delta: np.ndarray, witness: np.ndarray) -> sparse.csr_matrix:
    rows = np.arange(grid.n_nodes)
    weights = np.zeros_like(delta)
    active = grid.pairs[witness]
    if grid.dimension == 1:
        weights[rows, active[:, 0]] = 1.0
    else:
        da = delta[rows, active[:, 0]]
        db = delta[rows, active[:, 1]]
        weights[rows, active[:, 0]] = np.maximum(db, _CLAMP_FLOOR)
        weights[rows, active[:, 1]] = np.maximum(da, _CLAMP_FLOOR)
    jac = sparse.csr_matrix((grid.n_nodes, grid.n_nodes))
    for j, op in enumerate(grid.difference_operators):
        if np.any(weights[:, j]):
            jac = jac + sparse.diags(weights[:, j]) @ op
    return jac.tocsc()


def _newton_solve(
    grid: Grid,
    g: np.ndarray,
    start: GridFunction,
    options: SolverOptions,
) -> SolveReport:
    u = start
    result = ma_apply(u)
    res = result.values - g
    sup = float(np.max(np.abs(res)))
    for it in range(options.max_newton):
        if sup <= options.tol:
            return SolveReport(u, sup, it, "newton")
        jac = _newton_matrix(grid, result.second_differences, result.witness)
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", MatrixRankWarning)
            try:
                step = spsolve(jac, -res)
            except RuntimeError:
                step = np.full(grid.n_nodes, np.nan)
        if not np.all(np.isfinite(step)):
            logger.warning("Newton matrix singular at iteration %d; falling back to Gauss-Seidel", it)
            return _fallback(grid, g, u, options, it)

        norm0 = float(np.linalg.norm(res))
        tau = 1.0
        while True:
            trial = u.with_values(u.values + tau * step)
            trial_result = ma_apply(trial)
            trial_res = trial_result.values - g
            if np.linalg.norm(trial_res) <= (1.0 - 1e-4 * tau) * norm0:
                break
            tau /= 2
            if tau < options.min_step:
                logger.warning(
                    "Newton line search failed at iteration %d (residual=%.3e); falling back to Gauss-Seidel",
                    it,
                    sup,
                )
                return _fallback(grid, g, u, options, it)
        u, result, res = trial, trial_result, trial_res
        sup = float(np.max(np.abs(res)))
        logger.debug("newton %d step=%g residual=%.3e", it + 1, tau, sup)

    if sup <= options.tol:
        return SolveReport(u, sup, options.max_newton, "newton")
    raise NonConvergence(
        "Newton iteration budget exhausted",
        residual=sup,
        iterations=options.max_newton,
        hint="increase max_newton or use policy='sweep'",
    )


def _fallback(grid: Grid, g: np.ndarray, u: GridFunction, options: SolverOptions, done: int) -> SolveReport:
    report = _sweep_solve(grid, g, u, options)
    return SolveReport(report.u, report.residual, done + report.iterations, "sweep", fell_back=True)


_ENGINES = {"newton": _newton_solve, "sweep": _sweep_solve}


def newton_or_sweep(policy: str) -> Callable[[Grid, np.ndarray, GridFunction, SolverOptions], SolveReport]:
    """Select the Dirichlet engine for ``policy``."""
    try:
        return _ENGINES[policy]
    except KeyError:
        raise InvalidSpec(f"unknown solver policy {policy!r}; expected one of {sorted(_ENGINES)}") from None


def dirichlet_solve_report(
    grid: Grid,
    g: np.ndarray | float,
    boundary_data: BoundaryData | None = None,
    options: SolverOptions | None = None,
    initial: GridFunction | np.ndarray | None = None,
) -> SolveReport:
    """Solve ``M(u) = g`` with ``u = boundary_data`` on the boundary and report how."""
    options = options or SolverOptions()
    density = _as_density(grid, g)
    if initial is None:
        shell = GridFunction(grid, np.zeros(grid.n_nodes), boundary_data)
        start = shell.with_values(_initial_guess(grid, density, shell.boundary_values))
    else:
        values = initial.values if isinstance(initial, GridFunction) else initial
        start = GridFunction(grid, values, boundary_data)
    report = newton_or_sweep(options.policy)(grid, density, start, options)
    logger.debug(
        "dirichlet solve: policy=%s iterations=%d residual=%.3e%s",
        report.policy,
        report.iterations,
        report.residual,
        " (after fallback)" if report.fell_back else "",
    )
    return report


def solve_dirichlet(
    grid: Grid,
    g: np.ndarray | float,
    boundary_data: BoundaryData | None = None,
    options: SolverOptions | None = None,
    initial: GridFunction | np.ndarray | None = None,
) -> GridFunction:
    """Grid function with ``||M(u) - g||_inf <= options.tol``."""
    return dirichlet_solve_report(grid, g, boundary_data, options, initial).u


# ── Helpers for property checks ─────────────────────────────────────────

@dataclass(frozen=True)
class ComparisonReport:
    u1: GridFunction
    u2: GridFunction
    max_violation: float


def compare_solutions(
    grid: Grid,
    g1: np.ndarray | float,
    g2: np.ndarray | float,
    options: SolverOptions | None = None,
) -> ComparisonReport:
    """Solve both zero-boundary problems; ``max_violation`` is ``max(u2 - u1, 0)`` for ``g1 <= g2``."""
    d1, d2 = _as_density(grid, g1), _as_density(grid, g2)
    if np.any(d1 > d2):
        raise InvalidSpec("compare_solutions expects g1 <= g2 at every node")
    u1 = solve_dirichlet(grid, d1, options=options)
    u2 = solve_dirichlet(grid, d2, options=options)
    return ComparisonReport(u1, u2, float(max(np.max(u2.values - u1.values), 0.0)))


def random_convex_function(
    grid: Grid,
    seed: int,
    options: SolverOptions | None = None,
) -> GridFunction:
    """Zero-boundary convex sample: the solution for the density ``exp(a.x + b)`` with random ``a, b``."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=grid.dimension)
    b = rng.uniform(-1.0, 1.0)
    density = np.exp(grid.nodes @ a + b)
    return solve_dirichlet(grid, density, options=options)


def cone_interpolant(grid: Grid, apex: np.ndarray | None = None) -> GridFunction:
    """Nodal values of the cone with value -1 at ``apex`` (default the centroid) and 0 on the boundary."""
    return GridFunction(grid, grid.domain.gauge(grid.nodes, apex) - 1.0)
