"""Option models, config-file reading and environment settings.

Every tunable of the solvers is a pydantic model so that the CLI, the
samples and the tests validate options the same way.
"""
from __future__ import annotations

import os
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

THREADS_ENV = "MAEIGEN_THREADS"


# ── Solver option models ───────────────────────────────────────────────

class SolverOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: Literal["newton", "sweep"] = Field(
        default="newton",
        description="Dirichlet engine: damped Newton with Gauss-Seidel fallback, or Gauss-Seidel only",
    )
    tol: float = Field(default=1e-8, gt=0, description="Sup-norm tolerance on M(u) - g")
    max_sweeps: int = Field(default=100_000, ge=1, description="Symmetric Gauss-Seidel sweep budget")
    max_newton: int = Field(default=50, ge=1, description="Newton iteration budget")
    check_every: int = Field(default=10, ge=1, description="Sweeps between residual evaluations")
    min_step: float = Field(default=2.0 ** -12, gt=0, lt=1, description="Smallest Newton line-search step")


class EigenOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol_diff: float = Field(default=1e-6, gt=0, description="Relative sup-norm change between iterates")
    tol_R: float = Field(default=1e-8, gt=0, description="Relative change of the Rayleigh quotient")
    max_iter: int = Field(default=200, ge=1, description="Outer iteration budget")
    normalize: bool = Field(default=True, description="Rescale every iterate to sup-norm 1")
    tol_cert: float = Field(default=1e-6, ge=0, description="Slack for the monotonicity certificate")


class PicardOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float = Field(default=1e-8, gt=0, description="Relative sup-norm change between Picard iterates")
    max_iter: int = Field(default=500, ge=1, description="Picard iteration budget")
    growth_guard: float = Field(default=50.0, gt=1, description="Blow-up threshold relative to the first iterate")
    patience: int = Field(default=3, ge=1, description="Consecutive non-contracting steps that confirm blow-up")


class BracketOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda_max: float | None = Field(
        default=None, gt=0, description="Upper end of the search; default twice the Rayleigh estimate"
    )
    growth_guard: float = Field(default=50.0, gt=1, description="Blow-up threshold relative to the lambda=0 solution")
    bisect_tol: float = Field(default=0.01, gt=0, lt=1, description="Relative bracket width to stop at")
    tol: float = Field(default=1e-7, gt=0, description="Relative Picard convergence tolerance per bisection step")
    max_iter: int = Field(default=3000, ge=1, description="Picard budget per bisection step")
    patience: int = Field(default=3, ge=1, description="Consecutive non-contracting steps that confirm blow-up")


class ShootOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    rtol: float = Field(default=1e-10, gt=0, description="Relative tolerance of the ODE integrator")
    atol: float = Field(default=1e-12, gt=0, description="Absolute tolerance of the ODE integrator")
    xtol: float = Field(default=1e-13, gt=0, description="Root tolerance on lambda")
    lambda_start: float = Field(default=1.0, gt=0, description="First lambda tried when bracketing")

    def halved(self) -> "ShootOptions":
        return self.model_copy(update={"rtol": self.rtol / 2, "atol": self.atol / 2, "xtol": self.xtol / 2})


# ── CLI job ─────────────────────────────────────────────────────────────

class RunConfig(BaseModel):
    """Effective configuration of one CLI invocation (echoed to summary.json)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Literal["solve", "eigen", "lions", "semilinear", "oracle", "check"]
    domain: str = Field(default="disc 0 0 1", description="Domain grammar, e.g. 'disc 0 0 1'")
    measure: str = Field(default="lebesgue", description="Measure grammar, e.g. 'lebesgue' or 'radial:1,0.5'")
    h: float = Field(default=1 / 32, gt=0, description="Grid spacing")
    width: int = Field(default=2, ge=1, le=6, description="Stencil width W")
    tol: float = Field(default=1e-8, gt=0, description="Dirichlet solver tolerance")
    policy: Literal["newton", "sweep"] = "newton"
    max_sweeps: int = Field(default=100_000, ge=1)
    max_newton: int = Field(default=50, ge=1)
    tol_diff: float = Field(default=1e-6, gt=0)
    tol_R: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=200, ge=1)
    normalize: bool = True
    tol_cert: float = Field(default=1e-6, ge=0)
    u0: str = Field(default="plain", description="'plain' or a formula in x, y for the starting function")
    rhs: str = Field(default="const:1", description="Right-hand side density for 'solve'")
    boundary: str | None = Field(default=None, description="Boundary data formula for 'solve'")
    lambda_max: float | None = Field(default=None, gt=0)
    growth_guard: float = Field(default=50.0, gt=1)
    bisect_tol: float = Field(default=0.01, gt=0, lt=1)
    F: str = Field(default="1", description="Semilinear right-hand side F(x, t), formula in x, y, t")
    lipschitz_down: float = Field(default=0.0, ge=0)
    oracle: Literal["1d", "radial", "pl", "toric", "mass-probe"] = "1d"
    alpha: float = Field(default=0.5, gt=0, le=1)
    h_list: tuple[float, ...] = (1 / 16, 1 / 32, 1 / 64)
    pieces: int = Field(default=64, ge=1, description="Number of tangent planes for the PL cone oracle")
    n_polar: int = Field(default=256, ge=8, description="Polar grid size for the toric check")
    contour: bool = False
    seed: int = 0
    out: Path = Path("maeigen-out")

    def solver_options(self) -> SolverOptions:
        return SolverOptions(policy=self.policy, tol=self.tol, max_sweeps=self.max_sweeps, max_newton=self.max_newton)

    def eigen_options(self) -> EigenOptions:
        return EigenOptions(
            tol_diff=self.tol_diff,
            tol_R=self.tol_R,
            max_iter=self.max_iter,
            normalize=self.normalize,
            tol_cert=self.tol_cert,
        )

    def bracket_options(self) -> BracketOptions:
        return BracketOptions(
            lambda_max=self.lambda_max, growth_guard=self.growth_guard, bisect_tol=self.bisect_tol
        )

    def picard_options(self) -> PicardOptions:
        return PicardOptions(growth_guard=self.growth_guard)


# ── Config file and environment ────────────────────────────────────────

def read_config_file(path: Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def worker_count() -> int:
    """Worker threads allowed by MAEIGEN_THREADS (0 or unset means all cores)."""
    raw = os.getenv(THREADS_ENV, "0").strip() or "0"
    try:
        requested = int(raw)
    except ValueError:
        requested = 0
    if requested <= 0:
        return os.cpu_count() or 1
    return requested
