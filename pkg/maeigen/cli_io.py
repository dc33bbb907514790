"""Command-line entry point and output files.

Subcommands: ``solve``, ``eigen``, ``lions``, ``semilinear``, ``oracle`` and
``check``. Flags override values read from ``--config``; the merged
configuration is validated by :class:`~maeigen.config.RunConfig` and echoed
into ``summary.json``.

Exit codes: 0 success, 1 numerical non-convergence or IO failure, 2 invalid
input.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np
from pydantic import ValidationError

from maeigen.config import RunConfig, read_config_file, worker_count
from maeigen.continuation import BracketResult, PicardResult, SemilinearSpec, lions_bracket, solve_semilinear
from maeigen.domain_grid import ConvexDomain, Grid, MeasureSpec, build_domain, discretize, parse_measure
from maeigen.eigen_iteration import EigenResult, inverse_iterate
from maeigen.errors import InvalidSpec, MAEigenError, NonConvergence
from maeigen.expressions import compile_expression
from maeigen.functionals import cegrell_check, rayleigh
from maeigen.ma_operator import (
    GridFunction,
    SolveReport,
    compare_solutions,
    dirichlet_solve_report,
    ma_apply,
    random_convex_function,
)
from maeigen.oracles import (
    PLConvexFunction,
    RadialProblem,
    gradient_hull_area,
    mass_divergence_probe,
    oracle_1d,
    oracle_pl_ma,
    oracle_radial_converged,
    toric_convergence,
)

logger = logging.getLogger(__name__)

CONTOUR_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


# ── Result containers for oracle and check runs ─────────────────────────

@dataclass
class OracleTable:
    kind: str
    header: list[str]
    rows: list[list[float]]
    summary: dict[str, Any] = field(default_factory=dict)


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class CheckReport:
    outcomes: list[CheckOutcome]

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)


@dataclass
class SolveOutput:
    report: SolveReport


# ── Writers ─────────────────────────────────────────────────────────────

def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def write_solution_csv(u: GridFunction, path: Path) -> Path:
    header = "x,y,u" if u.grid.dimension == 2 else "x,u"
    lines = [header]
    for point, value in zip(u.grid.nodes, u.values):
        lines.append(",".join([*(_fmt(c) for c in point), _fmt(value)]))
    return _write_text(path, "\n".join(lines) + "\n")


def read_solution_csv(path: Path, grid: Grid) -> GridFunction:
    """Read back a solution file written for ``grid``; node coordinates must match."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.n_nodes, grid.dimension + 1):
        raise InvalidSpec(f"{path} has shape {data.shape}, expected {(grid.n_nodes, grid.dimension + 1)}")
    if not np.allclose(data[:, :-1], grid.nodes, rtol=0.0, atol=1e-12 * grid.domain.diameter):
        raise InvalidSpec(f"{path} was written for a different grid")
    return GridFunction(grid, data[:, -1])


def write_trace_jsonl(result: EigenResult, path: Path) -> Path:
    lines = [json.dumps(step.as_record()) for step in result.trace.steps]
    return _write_text(path, "\n".join(lines) + "\n")


def write_curve_csv(result: BracketResult, path: Path) -> Path:
    lines = ["lambda,sup_norm,converged"]
    for point in result.sup_norm_curve:
        lines.append(f"{_fmt(point.lam)},{_fmt(point.sup_norm)},{int(point.converged)}")
    return _write_text(path, "\n".join(lines) + "\n")


def write_contour_svg(u: GridFunction, path: Path) -> Path:
    """Level sets of ``u`` at ten equispaced levels."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "maeigen"
    x, y = u.grid.nodes.T
    lo, hi = float(u.values.min()), float(u.values.max())
    levels = np.linspace(lo, hi, 12)[1:-1] if hi > lo else np.array([lo])
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.tricontour(x, y, u.values, levels=levels, colors=CONTOUR_PALETTE[: len(levels)])
    ax.set_aspect("equal")
    ax.set_title("level sets of u")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _summary(config: RunConfig, payload: dict[str, Any]) -> dict[str, Any]:
    return {**payload, "config": config.model_dump(mode="json")}


def write_outputs(result: Any, config: RunConfig) -> list[Path]:
    """Write every output file for ``result`` into ``config.out``."""
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if isinstance(result, EigenResult):
        written.append(write_trace_jsonl(result, out / "trace.jsonl"))
        written.append(write_solution_csv(result.u, out / "solution.csv"))
        payload = {
            "lambda_hat": result.lambda_hat,
            "iterations": result.iterations,
            "converged": result.converged,
            "certificate_violations": result.certificate_violations,
            "strict_violations": result.strict_violations,
            "lambda_lo": result.lambda_lo,
            "residual": result.residual,
        }
        if config.contour and result.u.grid.dimension == 2:
            written.append(write_contour_svg(result.u, out / "contour.svg"))
    elif isinstance(result, SolveOutput):
        report = result.report
        written.append(write_solution_csv(report.u, out / "solution.csv"))
        payload = {
            "residual": report.residual,
            "iterations": report.iterations,
            "policy": report.policy,
            "fell_back": report.fell_back,
            "converged": True,
        }
        if config.contour and report.u.grid.dimension == 2:
            written.append(write_contour_svg(report.u, out / "contour.svg"))
    elif isinstance(result, BracketResult):
        written.append(write_curve_csv(result, out / "curve.csv"))
        written.append(write_solution_csv(result.witness_lo, out / "solution.csv"))
        payload = {
            "lambda_lo": result.lambda_lo,
            "lambda_hi": result.lambda_hi,
            "subsolution_checked": result.subsolution_checked,
        }
    elif isinstance(result, PicardResult):
        written.append(write_solution_csv(result.u, out / "solution.csv"))
        payload = {
            "iterations": result.iterations,
            "converged": result.converged,
            "residual": result.residual,
            "sup_norm": result.u.sup_norm,
        }
    elif isinstance(result, OracleTable):
        lines = [",".join(result.header)] + [",".join(_fmt(v) for v in row) for row in result.rows]
        written.append(_write_text(out / "oracle.csv", "\n".join(lines) + "\n"))
        payload = {"oracle": result.kind, **result.summary}
    elif isinstance(result, CheckReport):
        checks = [{"name": o.name, "passed": o.passed, "detail": o.detail} for o in result.outcomes]
        written.append(_write_text(out / "check.json", json.dumps(checks, indent=2) + "\n"))
        payload = {"passed": result.passed}
    else:
        raise TypeError(f"no writer for {type(result).__name__}")

    summary = json.dumps(_summary(config, payload), indent=2, allow_nan=True)
    written.append(_write_text(out / "summary.json", summary + "\n"))
    return written


# ── Jobs ────────────────────────────────────────────────────────────────

def _grid(config: RunConfig) -> tuple[ConvexDomain, Grid, MeasureSpec]:
    domain = build_domain(config.domain)
    return domain, discretize(domain, config.h, config.width), parse_measure(config.measure)


def _run_solve(config: RunConfig) -> SolveOutput:
    _, grid, _ = _grid(config)
    rhs = parse_measure(config.rhs).density(grid)
    boundary = None
    if config.boundary:
        expr = compile_expression(config.boundary, ("x", "y", "r"))
        boundary = expr
    return SolveOutput(dirichlet_solve_report(grid, rhs, boundary, config.solver_options()))


def _run_eigen(config: RunConfig) -> EigenResult:
    _, grid, nu = _grid(config)
    u0 = None
    if config.u0 != "plain":
        u0 = GridFunction.from_function(grid, compile_expression(config.u0, ("x", "y", "r")))
    return inverse_iterate(grid, nu, u0, config.eigen_options(), config.solver_options())


def _run_lions(config: RunConfig) -> BracketResult:
    _, grid, nu = _grid(config)
    return lions_bracket(grid, nu, config.bracket_options(), config.solver_options())


def _run_semilinear(config: RunConfig) -> PicardResult:
    _, grid, nu = _grid(config)
    spec = SemilinearSpec.from_text(config.F, config.lipschitz_down)
    return solve_semilinear(grid, nu, spec, config.picard_options(), config.solver_options())


def _radial_density(measure: MeasureSpec) -> Callable[[float], float]:
    if measure.kind == "constant":
        return lambda r: measure.c
    if measure.kind == "radial_power" and not measure.center:
        return lambda r: measure.c * r ** (-measure.beta) if r > 0 else math.inf
    raise InvalidSpec("the radial oracle needs a constant or centered radial_power measure")


def _run_oracle(config: RunConfig) -> OracleTable:
    domain = build_domain(config.domain)
    kind = config.oracle
    if kind == "1d":
        if domain.kind != "interval":
            raise InvalidSpec("the 1d oracle needs an interval domain")
        oracle = oracle_1d(domain.hi[0] - domain.lo[0])
        x = np.linspace(0.0, oracle.length, 201)
        rows = [[xi + domain.lo[0], ui] for xi, ui in zip(x, oracle.eigenfunction(x))]
        return OracleTable(kind, ["x", "u"], rows, {"lambda1": oracle.lambda1})
    if kind == "radial":
        if domain.kind != "disc":
            raise InvalidSpec("the radial oracle needs a disc domain")
        problem = RadialProblem(R=domain.radius, f=_radial_density(parse_measure(config.measure)))
        result, change = oracle_radial_converged(problem)
        rows = [[ri, ui] for ri, ui in zip(result.r, result.u)]
        return OracleTable(kind, ["r", "u"], rows, {"lambda1": result.lambda1, "tolerance_change": change})
    if kind == "pl":
        cone = PLConvexFunction.cone(config.pieces)
        atoms = oracle_pl_ma(cone, domain)
        rows = [[*p, m] for p, m in zip(atoms.points, atoms.masses)]
        expected = config.pieces / 2 * math.sin(2 * math.pi / config.pieces) if config.pieces >= 3 else 0.0
        return OracleTable(
            kind,
            ["x", "y", "mass"],
            rows,
            {"total_mass": atoms.total_mass, "polygon_area": expected, "hull_area": gradient_hull_area(cone)},
        )
    if kind == "toric":
        a, b = (domain.lo[0], domain.hi[0]) if domain.kind == "interval" else (0.0, 1.0)
        n = config.n_polar
        reports, order = toric_convergence(lambda x: x**2, np.ones_like, (n // 4, n // 2, n), a, b)
        sizes = (n // 4, n // 2, n)
        rows = [[s, r.lhs, r.rhs, r.abs_diff] for s, r in zip(sizes, reports)]
        return OracleTable(kind, ["n", "lhs", "rhs", "abs_diff"], rows, {"observed_order": order})
    mass_rows = mass_divergence_probe(
        domain, parse_measure(config.measure), config.alpha, config.h_list, config.width, config.solver_options()
    )
    rows = [[r.h, r.mass, math.nan if r.ratio is None else r.ratio] for r in mass_rows]
    return OracleTable(kind, ["h", "mass", "ratio"], rows, {"alpha": config.alpha})


def _run_check(config: RunConfig) -> CheckReport:
    """Property suite on the configured grid: homogeneity, monotonicity, comparison, Cegrell, certificate."""
    _, grid, nu = _grid(config)
    solver = config.solver_options()
    n = grid.dimension
    samples = [random_convex_function(grid, config.seed + s, solver) for s in range(4)]

    def homogeneity() -> CheckOutcome:
        worst = 0.0
        for u in samples:
            base, r0 = ma_apply(u).values, rayleigh(u, nu).R
            for c in (0.1, 2.0, 10.0):
                scaled = ma_apply(u.scaled(c)).values
                worst = max(worst, float(np.max(np.abs(scaled - c**n * base)) / (c**n * np.max(base))))
                worst = max(worst, abs(rayleigh(u.scaled(c), nu).R - r0) / r0)
        return CheckOutcome("homogeneity", worst <= 1e-12, f"max relative error {worst:.2e}")

    def scheme_monotone() -> CheckOutcome:
        rng = np.random.default_rng(config.seed)
        u = samples[0]
        base = ma_apply(u).values
        worst = 0.0
        for node in rng.integers(0, grid.n_nodes, size=20):
            bumped = u.values.copy()
            nbrs = grid.neighbor[node][grid.neighbor[node] >= 0]
            if nbrs.size == 0:
                continue
            bumped[rng.choice(nbrs)] += 1e-3
            worst = max(worst, float(base[node] - ma_apply(u.with_values(bumped)).values[node]))
        return CheckOutcome("scheme monotone", worst <= 1e-12, f"largest decrease {worst:.2e}")

    def comparison() -> CheckOutcome:
        rng = np.random.default_rng(config.seed + 1)
        g1 = rng.uniform(0.5, 1.5, grid.n_nodes)
        g2 = g1 + rng.uniform(0.0, 1.0, grid.n_nodes)
        report = compare_solutions(grid, g1, g2, solver)
        return CheckOutcome("comparison principle", report.max_violation <= 1e-8, f"max violation {report.max_violation:.2e}")

    def cegrell() -> CheckOutcome:
        slacks = [cegrell_check(u, v).slack for u, v in zip(samples, samples[1:])]
        return CheckOutcome("cegrell inequality", max(slacks) <= 1.05, f"max slack {max(slacks):.4f}")

    def certificate() -> CheckOutcome:
        result = inverse_iterate(grid, nu, None, config.eigen_options(), solver)
        lower = all(rayleigh(u, nu).R >= result.lambda_hat**n * (1 - 0.02) for u in samples)
        ok = not result.certificate_violations and lower
        return CheckOutcome(
            "eigen certificate",
            ok,
            f"lambda_hat={result.lambda_hat:.10g} violations={result.certificate_violations} rayleigh_lower_bound={lower}",
        )

    checks = [homogeneity, scheme_monotone, comparison, cegrell, certificate]
    with ThreadPoolExecutor(max_workers=max(1, min(worker_count(), len(checks)))) as pool:
        outcomes = list(pool.map(lambda check: check(), checks))
    return CheckReport(outcomes)


_JOBS: dict[str, Callable[[RunConfig], Any]] = {
    "solve": _run_solve,
    "eigen": _run_eigen,
    "lions": _run_lions,
    "semilinear": _run_semilinear,
    "oracle": _run_oracle,
    "check": _run_check,
}


# ── Argument parsing ────────────────────────────────────────────────────

def _number(text: str) -> float:
    return float(Fraction(text.strip()))


def _number_list(text: str) -> list[float]:
    return [_number(part) for part in text.split(",") if part.strip()]


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maeigen", description="Monge-Ampere eigenvalue toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value file; flags override it")
    common.add_argument("--domain", help="e.g. 'disc 0 0 1', 'interval 0 1', 'box 0 0 1 1'")
    common.add_argument("--measure", help="lebesgue | const:c | radial:c,beta | expr:<formula>")
    common.add_argument("--h", type=_number, help="grid spacing")
    common.add_argument("--width", type=int, help="stencil width W")
    common.add_argument("--tol", type=float, help="Dirichlet solver tolerance")
    common.add_argument("--policy", choices=["newton", "sweep"])
    common.add_argument("--max-sweeps", type=int)
    common.add_argument("--max-newton", type=int)
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--verbose", action="store_true", help="debug logging on stderr")

    solve = sub.add_parser("solve", parents=[common], help="plain Dirichlet problem M(u) = g")
    solve.add_argument("--rhs", help="right-hand side density, same grammar as --measure")
    solve.add_argument("--boundary", help="boundary data formula in x, y")
    solve.add_argument("--contour", action="store_const", const=True)

    eigen = sub.add_parser("eigen", parents=[common], help="inverse iteration for the first eigenvalue")
    eigen.add_argument("--tol-diff", type=float)
    eigen.add_argument("--tol-R", type=float)
    eigen.add_argument("--max-iter", type=int)
    eigen.add_argument("--tol-cert", type=float)
    eigen.add_argument("--no-normalize", dest="normalize", action="store_const", const=False)
    eigen.add_argument("--u0", help="'plain' or a nonpositive formula in x, y")
    eigen.add_argument("--contour", action="store_const", const=True)

    lions = sub.add_parser("lions", parents=[common], help="bracket the eigenvalue with the Lions family")
    lions.add_argument("--lambda-max", type=float)
    lions.add_argument("--growth-guard", type=float)
    lions.add_argument("--bisect-tol", type=float)

    semi = sub.add_parser("semilinear", parents=[common], help="solve M(u) = F(x, u)^n nu")
    semi.add_argument("--F", help="formula in x, y, t or 'lions:<lambda>'")
    semi.add_argument("--lipschitz-down", type=float)
    semi.add_argument("--growth-guard", type=float)

    oracle = sub.add_parser("oracle", parents=[common], help="reference computations")
    oracle.add_argument("oracle", choices=["1d", "radial", "pl", "toric", "mass-probe"])
    oracle.add_argument("--alpha", type=float)
    oracle.add_argument("--h-list", type=_number_list)
    oracle.add_argument("--pieces", type=int)
    oracle.add_argument("--n-polar", type=int)

    check = sub.add_parser("check", parents=[common], help="run the property suite on one grid")
    check.add_argument("--seed", type=int)
    check.add_argument("--tol-diff", type=float)
    check.add_argument("--max-iter", type=int)
    return parser


def _merge(args: argparse.Namespace) -> dict[str, Any]:
    values: dict[str, Any] = {}
    if args.config is not None:
        values.update(read_config_file(args.config))
        if "h_list" in values:
            values["h_list"] = _number_list(values["h_list"])
        if "h" in values:
            values["h"] = _number(values["h"])
    skip = {"config", "verbose"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            values[key] = value
    return values


def _describe_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        name = str(err["loc"][0]) if err["loc"] else "?"
        parts.append(f"invalid value for {_flag(name)}: {err['msg']}")
    return "; ".join(parts)


def run_cli(argv: list[str] | None = None) -> int:
    """Parse ``argv``, run one job, write its outputs and return the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = RunConfig(**_merge(args))
    except ValidationError as exc:
        print(f"❌ {_describe_validation(exc)}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return 2
    except (OSError, ValueError) as exc:
        print(f"❌ cannot read config: {exc}", file=sys.stderr)
        return 2

    try:
        result = _JOBS[config.command](config)
    except NonConvergence as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return 1
    except MAEigenError as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    try:
        written = write_outputs(result, config)
    except OSError as exc:
        print(f"❌ cannot write {exc.filename or config.out}: {exc.strerror or exc}", file=sys.stderr)
        return 1

    code = _report(result)
    print(f"📊 wrote {', '.join(p.name for p in written)} to {config.out}")
    return code


def _report(result: Any) -> int:
    if isinstance(result, EigenResult):
        marker = "✅" if result.converged else "⚠️"
        print(f"{marker} lambda_hat = {result.lambda_hat:.10g} after {result.iterations} steps "
              f"(lower bound {result.lambda_lo:.10g}, residual {result.residual:.2e})")
        if result.certificate_violations:
            print(f"⚠️ certificate violations at steps {result.certificate_violations}")
        return 0 if result.converged else 1
    if isinstance(result, SolveOutput):
        print(f"✅ solved with {result.report.policy} in {result.report.iterations} iterations, "
              f"residual {result.report.residual:.2e}")
    elif isinstance(result, BracketResult):
        print(f"✅ lambda_1 in [{result.lambda_lo:.6g}, {result.lambda_hi:.6g}]")
    elif isinstance(result, PicardResult):
        print(f"✅ semilinear solve converged in {result.iterations} steps, sup norm {result.u.sup_norm:.6g}")
    elif isinstance(result, OracleTable):
        details = ", ".join(f"{k}={v:.10g}" if isinstance(v, float) else f"{k}={v}" for k, v in result.summary.items())
        print(f"✅ {result.kind} oracle: {details}")
    elif isinstance(result, CheckReport):
        for o in result.outcomes:
            print(f"{'✅' if o.passed else '❌'} {o.name}: {o.detail}")
        return 0 if result.passed else 1
    return 0


def main() -> None:
    sys.exit(run_cli())
