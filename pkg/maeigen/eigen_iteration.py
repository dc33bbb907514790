"""Inverse iteration ``M(u_{k+1}) = R(u_k) (-u_k)^n nu`` with monotonicity certificates.

With normalization on, every iterate is rescaled to sup-norm 1 and the
cumulative factor is kept in the trace, so the unnormalized sequence (whose
energies and masses increase while ``R`` decreases) can be rebuilt exactly:
the discrete operator is n-homogeneous and ``E``, ``I`` are
(n+1)-homogeneous.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from maeigen.config import EigenOptions, SolverOptions
from maeigen.domain_grid import Grid, MeasureSpec
from maeigen.errors import DegenerateStart, InvalidSpec, NonConvergence, ZeroFunction
from maeigen.functionals import cegrell_check, rayleigh
from maeigen.ma_operator import GridFunction, SolveReport, dirichlet_solve_report, ma_apply, solve_dirichlet

logger = logging.getLogger(__name__)


# ── Trace ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TraceStep:
    k: int
    E: float
    I: float  # noqa: E741
    R: float
    lambda_hat: float
    sup_diff: float | None
    residual: float | None
    scale: float
    cegrell_slack: float | None = None

    def as_record(self) -> dict[str, float | int | None]:
        return asdict(self)


@dataclass
class IterationTrace:
    """Per-step record; ``E`` and ``I`` are of the stored (possibly normalized) iterate."""

    dimension: int
    steps: list[TraceStep] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, k: int) -> TraceStep:
        return self.steps[k]

    def append(self, step: TraceStep) -> None:
        self.steps.append(step)

    def lifted(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Energies, masses and ratios of the unnormalized iteration."""
        p = self.dimension + 1
        scale = np.array([s.scale for s in self.steps])
        e_val = np.array([s.E for s in self.steps]) * scale**p
        i_val = np.array([s.I for s in self.steps]) * scale**p
        r_val = np.array([s.R for s in self.steps])
        return e_val, i_val, r_val


@dataclass(frozen=True)
class Violation:
    index: int
    quantity: str
    before: float
    after: float


@dataclass(frozen=True)
class EigenResult:
    lambda_hat: float
    u: GridFunction
    trace: IterationTrace
    converged: bool
    certificate_violations: list[int]
    lambda_lo: float
    residual: float
    strict_violations: list[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1


@dataclass(frozen=True)
class ProportionalityReport:
    c: float
    dev: float


# ── Iteration ───────────────────────────────────────────────────────────

def _eigen_rhs(u: GridFunction, ratio: float, density: np.ndarray) -> np.ndarray:
    n = u.grid.dimension
    return ratio * np.clip(-u.values, 0.0, None) ** n * density


def inverse_step(
    u: GridFunction,
    density: np.ndarray,
    solver: SolverOptions | None = None,
    ratio: float | None = None,
) -> SolveReport:
    """One step ``solve_dirichlet(R(u) (-u)^n nu)`` warm-started from ``u``.

    The residual tolerance is relative to ``max(rhs)``, so ``inverse_step(c u)``
    is ``c inverse_step(u)`` up to rounding.
    """
    solver = solver or SolverOptions()
    if ratio is None:
        ratio = rayleigh(u, density).R
    rhs = _eigen_rhs(u, ratio, density)
    inner = solver.model_copy(update={"tol": solver.tol * max(float(np.max(rhs)), np.finfo(float).tiny)})
    return dirichlet_solve_report(u.grid, rhs, options=inner, initial=u)


def fixed_point_residual(u: GridFunction, density: np.ndarray) -> float:
    """``||M(u) - R(u) (-u)^n nu||_inf``."""
    ma_values = ma_apply(u).values
    ratio = rayleigh(u, density, ma_values).R
    return float(np.max(np.abs(ma_values - _eigen_rhs(u, ratio, density))))


def inverse_iterate(
    grid: Grid,
    nu: MeasureSpec,
    u0: GridFunction | None = None,
    options: EigenOptions | None = None,
    solver: SolverOptions | None = None,
) -> EigenResult:
    """Run the inverse iteration from ``u0`` (default: the solution of ``M(u) = nu``)."""
    options = options or EigenOptions()
    solver = solver or SolverOptions()
    density = nu.density(grid)
    n = grid.dimension

    if u0 is None:
        u0 = solve_dirichlet(grid, density, options=solver)
    if u0.sup_norm == 0.0:
        raise DegenerateStart("inverse iteration cannot start from u0 = 0")
    if np.max(u0.values) > 1e-12 * u0.sup_norm:
        raise InvalidSpec("u0 must be nonpositive at every node")
    defect = ma_apply(u0).convexity_defect
    if defect < -solver.tol:
        logger.warning("u0 is not grid-convex (convexity defect %.3e)", defect)

    scale = 1.0
    u = u0
    if options.normalize:
        scale = u0.sup_norm
        u = u0.scaled(1.0 / scale)
    report = rayleigh(u, density)
    trace = IterationTrace(dimension=n)
    trace.append(TraceStep(0, report.E, report.I, report.R, report.lambda_hat, None, None, scale))
    logger.info("eigen step 0: lambda_hat=%.10g", report.lambda_hat)

    converged = False
    for k in range(options.max_iter):
        try:
            solved = inverse_step(u, density, solver, report.R)
        except NonConvergence as exc:
            raise NonConvergence(
                f"inner Dirichlet solve failed: {exc.args[0]}",
                residual=exc.residual,
                iterations=exc.iterations,
                step=k + 1,
                hint=exc.hint,
            ) from exc
        w = solved.u
        slack = cegrell_check(u, w).slack
        sup_diff = float(np.max(np.abs(w.values - u.values)) / u.sup_norm)
        if options.normalize:
            factor = w.sup_norm
            if factor == 0.0:
                raise ZeroFunction(f"iterate {k + 1} vanished")
            w = w.scaled(1.0 / factor)
            scale *= factor
        new = rayleigh(w, density)
        trace.append(
            TraceStep(k + 1, new.E, new.I, new.R, new.lambda_hat, sup_diff, solved.residual, scale, slack)
        )
        logger.info(
            "eigen step %d: lambda_hat=%.10g sup_diff=%.3e residual=%.3e",
            k + 1,
            new.lambda_hat,
            sup_diff,
            solved.residual,
        )
        r_change = abs(report.R - new.R)
        u, report = w, new
        if sup_diff < options.tol_diff and r_change < options.tol_R * trace[k].R:
            converged = True
            break

    if not converged:
        logger.warning("inverse iteration stopped after %d steps without meeting the tolerances", options.max_iter)

    final = u if options.normalize else u.scaled(1.0 / u.sup_norm)
    final_report = rayleigh(final, density)
    violations = certify_monotone(trace, options.tol_cert)
    strict = sorted({v.index for v in monotonicity_violations(trace, options.tol_cert, strict=True)})
    if strict and not violations:
        logger.info("plain monotonicity fails at steps %s within the Cegrell allowance", strict)
    return EigenResult(
        lambda_hat=final_report.lambda_hat,
        u=final,
        trace=trace,
        converged=converged,
        certificate_violations=violations,
        strict_violations=strict,
        lambda_lo=subsolution_bound(final, density),
        residual=fixed_point_residual(final, density),
    )


# ── Certificates and comparisons ────────────────────────────────────────

def _step_allowance(trace: IterationTrace, index: int, strict: bool) -> tuple[float, float, float]:
    """Factors by which ``E``, ``I`` and ``R`` may move the wrong way at ``index``.

    With ``s`` the Cegrell slack of the pair ``(u_{k-1}, u_k)``, the step
    equation and the exact discrete Hoelder inequality give
    ``E_k >= E_{k-1} s^(-(n+1)/n)``, ``I_k >= I_{k-1} s^(-(n+1)^2/n)`` and
    ``R_k <= R_{k-1} s^(n+1)``. For ``s <= 1`` these are the plain
    monotonicity statements.
    """
    slack = trace[index].cegrell_slack
    if strict or slack is None or not slack > 1.0:
        return 1.0, 1.0, 1.0
    n = trace.dimension
    return slack ** (-(n + 1) / n), slack ** (-((n + 1) ** 2) / n), slack ** (n + 1)


def monotonicity_violations(
    trace: IterationTrace,
    tol_cert: float = 1e-6,
    strict: bool = False,
) -> list[Violation]:
    """Every failed monotonicity check on the unnormalized lift of ``trace``.

    By default each step is allowed the drift implied by its recorded
    Cegrell slack; ``strict=True`` checks plain monotonicity.
    """
    e_val, i_val, r_val = trace.lifted()
    q_val = e_val / i_val ** (1.0 / (trace.dimension + 1))
    found: list[Violation] = []
    for k in range(len(trace) - 1):
        e_fac, i_fac, r_fac = _step_allowance(trace, k + 1, strict)
        checks = (
            ("E", e_val[k + 1] < e_val[k] * e_fac * (1 - tol_cert), e_val),
            ("I", i_val[k + 1] < i_val[k] * i_fac * (1 - tol_cert), i_val),
            ("R", r_val[k + 1] > r_val[k] * r_fac * (1 + tol_cert), r_val),
            ("E/I^(1/(n+1))", q_val[k + 1] > q_val[k] * (1 + tol_cert), q_val),
        )
        for name, failed, series in checks:
            if failed:
                found.append(Violation(k + 1, name, float(series[k]), float(series[k + 1])))
    return found


def certify_monotone(trace: IterationTrace, tol_cert: float = 1e-6, strict: bool = False) -> list[int]:
    """Indices of steps breaking monotonicity; empty means the certificate passes."""
    found = monotonicity_violations(trace, tol_cert, strict)
    for v in found:
        logger.warning("certificate violation at step %d: %s %.12g -> %.12g", v.index, v.quantity, v.before, v.after)
    return sorted({v.index for v in found})


def proportionality(u: GridFunction, v: GridFunction) -> ProportionalityReport:
    """Best ``c > 0`` minimizing ``||u - c v||_inf / ||u||_inf``."""
    if u.sup_norm == 0.0 or v.sup_norm == 0.0:
        raise ZeroFunction("proportionality test needs two nonzero functions")

    def deviation(c: float) -> float:
        return float(np.max(np.abs(u.values - c * v.values)) / u.sup_norm)

    c0 = u.sup_norm / v.sup_norm
    best_c, best_dev = c0, deviation(c0)
    # deviation is convex in c
    try:
        refined = minimize_scalar(deviation, bracket=(0.5 * c0, 2.0 * c0), method="golden", tol=1e-12)
    except (ValueError, RuntimeError) as exc:
        logger.debug("golden-section refinement failed (%s); keeping the sup-norm ratio", exc)
        return ProportionalityReport(c=best_c, dev=best_dev)
    if refined.success and deviation(float(refined.x)) < best_dev:
        best_c, best_dev = float(refined.x), deviation(float(refined.x))
    return ProportionalityReport(c=best_c, dev=best_dev)


def subsolution_bound(u: GridFunction, nu: MeasureSpec | np.ndarray) -> float:
    """Largest ``lambda`` with ``M(u) >= (-lambda u)^n nu`` at every node."""
    density = nu.density(u.grid) if isinstance(nu, MeasureSpec) else np.asarray(nu, dtype=float)
    n = u.grid.dimension
    weight = np.clip(-u.values, 0.0, None) ** n * density
    active = weight > 0
    if not np.any(active):
        raise ZeroFunction("subsolution bound needs u < 0 where nu charges")
    ratios = ma_apply(u).values[active] / weight[active]
    return float(np.min(ratios) ** (1.0 / n))
