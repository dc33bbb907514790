"""First eigenvalue of the real Monge-Ampere operator on convex domains.

Typical use::

    from maeigen import MeasureSpec, build_domain, discretize, inverse_iterate

    grid = discretize(build_domain("disc 0 0 1"), h=1 / 32)
    result = inverse_iterate(grid, MeasureSpec.lebesgue())
    print(result.lambda_hat, result.certificate_violations)
"""
from maeigen.config import BracketOptions, EigenOptions, PicardOptions, RunConfig, ShootOptions, SolverOptions
from maeigen.continuation import (
    BracketResult,
    SemilinearSpec,
    is_lions_subsolution,
    lions_bracket,
    lions_member,
    solve_semilinear,
)
from maeigen.domain_grid import (
    ConvexDomain,
    Grid,
    MeasureSpec,
    build_domain,
    discretize,
    distance_to_boundary,
    parse_measure,
    stencil_directions,
)
from maeigen.eigen_iteration import (
    EigenResult,
    IterationTrace,
    TraceStep,
    certify_monotone,
    inverse_iterate,
    monotonicity_violations,
    proportionality,
    subsolution_bound,
)
from maeigen.errors import (
    AllSubcritical,
    AllSupercritical,
    DegeneratePosition,
    DegenerateStart,
    DomainError,
    GridError,
    InvalidSpec,
    MAEigenError,
    NegativeDensity,
    NoBracket,
    NonConvergence,
    ZeroFunction,
)
from maeigen.functionals import FunctionalReport, cegrell_check, energy, mass_integral, rayleigh
from maeigen.ma_operator import (
    DiscreteMAResult,
    GridFunction,
    compare_solutions,
    cone_interpolant,
    ma_apply,
    newton_or_sweep,
    random_convex_function,
    solve_dirichlet,
    total_mass,
)
from maeigen.oracles import (
    PLConvexFunction,
    RadialProblem,
    mass_divergence_probe,
    oracle_1d,
    oracle_pl_ma,
    oracle_radial,
    toric_check_1d,
)

__all__ = [
    "AllSubcritical",
    "AllSupercritical",
    "BracketOptions",
    "BracketResult",
    "ConvexDomain",
    "DegeneratePosition",
    "DegenerateStart",
    "DiscreteMAResult",
    "DomainError",
    "EigenOptions",
    "EigenResult",
    "FunctionalReport",
    "Grid",
    "GridError",
    "GridFunction",
    "InvalidSpec",
    "IterationTrace",
    "MAEigenError",
    "MeasureSpec",
    "NegativeDensity",
    "NoBracket",
    "NonConvergence",
    "PLConvexFunction",
    "PicardOptions",
    "RadialProblem",
    "RunConfig",
    "SemilinearSpec",
    "ShootOptions",
    "SolverOptions",
    "TraceStep",
    "ZeroFunction",
    "build_domain",
    "cegrell_check",
    "certify_monotone",
    "compare_solutions",
    "cone_interpolant",
    "discretize",
    "distance_to_boundary",
    "energy",
    "inverse_iterate",
    "is_lions_subsolution",
    "lions_bracket",
    "lions_member",
    "ma_apply",
    "mass_divergence_probe",
    "mass_integral",
    "monotonicity_violations",
    "newton_or_sweep",
    "oracle_1d",
    "oracle_pl_ma",
    "oracle_radial",
    "parse_measure",
    "proportionality",
    "random_convex_function",
    "rayleigh",
    "solve_dirichlet",
    "stencil_directions",
    "subsolution_bound",
    "toric_check_1d",
    "total_mass",
]
