"""Reference computations that do not go through the grid solvers.

* :func:`oracle_1d` -- closed form of the interval problem (``M(u) = u''``);
* :func:`oracle_radial` -- shooting on the radial ODE for a disc;
* :func:`oracle_pl_ma` -- Alexandrov measure of a max of affine functions;
* :func:`mass_divergence_probe` -- total mass of ``-(-u)^alpha`` under refinement;
* :func:`toric_check_1d` -- the logarithmic pushforward identity in one variable.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq
from scipy.spatial import ConvexHull

from maeigen.config import ShootOptions, SolverOptions, worker_count
from maeigen.domain_grid import ConvexDomain, MeasureSpec, discretize
from maeigen.errors import DegeneratePosition, InvalidSpec, NoBracket
from maeigen.ma_operator import GridFunction, solve_dirichlet, total_mass

logger = logging.getLogger(__name__)


# ── 1D closed form ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class Oracle1D:
    length: float
    lambda1: float

    def eigenfunction(self, x: np.ndarray) -> np.ndarray:
        """``-sin(pi x / L)`` on ``[0, L]``, normalized to sup-norm 1."""
        return -np.sin(np.pi * np.asarray(x, dtype=float) / self.length)


def oracle_1d(length: float = 1.0) -> Oracle1D:
    if not length > 0:
        raise InvalidSpec(f"interval length must be positive, got {length}")
    return Oracle1D(length=float(length), lambda1=math.pi**2 / length**2)


# ── Radial shooting ─────────────────────────────────────────────────────

@dataclass(frozen=True)
class RadialProblem:
    """Disc of radius ``R`` with radial density ``f(r) >= 0``."""

    R: float = 1.0
    f: Callable[[float], float] = lambda r: 1.0

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise InvalidSpec(f"disc radius must be positive, got {self.R}")
        mass, _ = quad(lambda r: self.f(r) * 2 * math.pi * r, 0.0, self.R, limit=200)
        if not math.isfinite(mass) or mass <= 0:
            raise InvalidSpec(f"radial density has invalid total mass {mass}")


@dataclass(frozen=True)
class RadialResult:
    lambda1: float
    r: np.ndarray
    u: np.ndarray


def _radial_start(problem: RadialProblem, lam: float) -> tuple[float, float, float]:
    r0 = 10 * np.finfo(float).eps ** 0.25 * problem.R
    inner, _ = quad(lambda s: problem.f(s) * s, 0.0, r0)
    slope = lam * math.sqrt(2 * inner)
    return r0, -1.0 + slope * r0 / 2, slope


def _integrate(problem: RadialProblem, lam: float, opts: ShootOptions, dense: bool = False):
    r0, u0, p0 = _radial_start(problem, lam)

    def rhs(r: float, y: np.ndarray) -> list[float]:
        u, p = y
        return [p, lam**2 * u * u * problem.f(r) * r / p]

    return solve_ivp(
        rhs,
        (r0, problem.R),
        [u0, max(p0, 1e-300)],
        method="DOP853",
        rtol=opts.rtol,
        atol=opts.atol,
        dense_output=dense,
    )


def _end_value(problem: RadialProblem, lam: float, opts: ShootOptions) -> float:
    sol = _integrate(problem, lam, opts)
    if not sol.success:
        raise NoBracket(f"radial integration failed at lambda={lam:g}: {sol.message}")
    return float(sol.y[0, -1])


def oracle_radial(problem: RadialProblem, opts: ShootOptions | None = None, samples: int = 201) -> RadialResult:
    """First eigenvalue of ``u'' u'/r = lambda^2 u^2 f(r)``, ``u(0) = -1``, ``u(R) = 0``."""
    opts = opts or ShootOptions()
    lo = hi = opts.lambda_start
    g_lo = g_hi = _end_value(problem, lo, opts)
    for _ in range(60):
        if g_lo < 0 < g_hi:
            break
        if g_hi <= 0:
            lo, g_lo = hi, g_hi
            hi *= 2
            g_hi = _end_value(problem, hi, opts)
        else:
            hi, g_hi = lo, g_lo
            lo /= 2
            g_lo = _end_value(problem, lo, opts)
    else:
        raise NoBracket("could not bracket a sign change of u(R) in lambda")

    lam = brentq(lambda x: _end_value(problem, x, opts), lo, hi, xtol=opts.xtol, rtol=4 * np.finfo(float).eps)
    sol = _integrate(problem, lam, opts, dense=True)
    r0 = sol.t[0]
    r = np.concatenate([[0.0], np.linspace(r0, problem.R, samples - 1)])
    u = np.concatenate([[-1.0], sol.sol(r[1:])[0]])
    logger.debug("radial oracle: R=%g lambda1=%.14g", problem.R, lam)
    return RadialResult(lambda1=float(lam), r=r, u=u)


def oracle_radial_converged(problem: RadialProblem, opts: ShootOptions | None = None) -> tuple[RadialResult, float]:
    """Run the oracle twice, the second time with halved tolerances; return it and the relative change."""
    opts = opts or ShootOptions()
    first = oracle_radial(problem, opts)
    second = oracle_radial(problem, opts.halved())
    return second, abs(second.lambda1 - first.lambda1) / second.lambda1


# ── Piecewise-linear Alexandrov measure ─────────────────────────────────

@dataclass(frozen=True)
class PLConvexFunction:
    """``u(x) = max_i (gradients[i] . x + offsets[i])``."""

    gradients: np.ndarray
    offsets: np.ndarray

    def __post_init__(self) -> None:
        g = np.atleast_2d(np.asarray(self.gradients, dtype=float))
        b = np.asarray(self.offsets, dtype=float).reshape(-1)
        if len(g) == 0 or g.shape[1] != 2 or len(g) != len(b):
            raise InvalidSpec("need at least one piece with a 2D gradient and one offset per gradient")
        object.__setattr__(self, "gradients", g)
        object.__setattr__(self, "offsets", b)

    @classmethod
    def cone(cls, pieces: int, radius: float = 1.0) -> PLConvexFunction:
        """Tangent planes of ``|x| - radius`` with gradients on the unit circle."""
        theta = 2 * np.pi * np.arange(pieces) / pieces
        return cls(np.column_stack([np.cos(theta), np.sin(theta)]), np.full(pieces, -radius))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.max(pts @ self.gradients.T + self.offsets, axis=1)

    def redundant_pieces(self, domain: ConvexDomain, samples: int = 4000, seed: int = 0) -> list[int]:
        """Pieces that are never the maximum at sampled points of ``domain``."""
        rng = np.random.default_rng(seed)
        lo, hi = domain.bounds()
        pts = rng.uniform(lo, hi, size=(samples, 2))
        pts = pts[domain.contains(pts)]
        winners = np.argmax(pts @ self.gradients.T + self.offsets, axis=1)
        return sorted(set(range(len(self.offsets))) - set(winners.tolist()))


@dataclass(frozen=True)
class AtomicMeasure:
    points: np.ndarray
    masses: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))


def _shoelace(points: np.ndarray) -> float:
    x, y = points.T
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def _hull_area(points: np.ndarray) -> float:
    hull = ConvexHull(points)
    return _shoelace(points[hull.vertices])


def oracle_pl_ma(u: PLConvexFunction, domain: ConvexDomain, tol: float = 1e-10) -> AtomicMeasure:
    """Atoms at the vertices of ``u`` inside ``domain``; mass = area of the active gradients' hull."""
    g, b = u.gradients, u.offsets
    m = len(b)
    if m < 3:
        return AtomicMeasure(np.zeros((0, 2)), np.zeros(0))

    triples = np.array(list(itertools.combinations(range(m), 3)))
    i, j, k = triples.T
    rows = np.stack([g[i] - g[j], g[i] - g[k]], axis=1)
    rhs = np.stack([b[j] - b[i], b[k] - b[i]], axis=1)
    det = np.linalg.det(rows)
    scale = max(1.0, float(np.max(np.abs(g))))
    ok = np.abs(det) > 1e-14 * scale**2
    candidates = np.linalg.solve(rows[ok], rhs[ok][..., None])[..., 0]
    own = np.einsum("ij,ij->i", g[i[ok]], candidates) + b[i[ok]]
    top = u(candidates)
    keep = (top <= own + tol * (1 + np.abs(own))) & domain.contains(candidates)
    candidates = candidates[keep]

    points, masses, seen = [], [], set()
    for x in candidates:
        key = tuple(np.round(x, 9))
        if key in seen:
            continue
        seen.add(key)
        values = g @ x + b
        peak = values.max()
        active = np.flatnonzero(values >= peak - tol * (1 + abs(peak)))
        grads = g[active]
        gaps = np.linalg.norm(grads[:, None, :] - grads[None, :, :], axis=-1)
        if np.any(gaps[np.triu_indices(len(active), 1)] < 1e-12):
            raise DegeneratePosition(f"two active pieces at {tuple(x)} share a gradient")
        a, b_, c = np.array(list(itertools.combinations(range(len(active)), 3))).T
        e1, e2 = grads[b_] - grads[a], grads[c] - grads[a]
        if np.any(np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 1e-12 * scale**2):
            raise DegeneratePosition(f"three active pieces at {tuple(x)} meet along a common line")
        points.append(x)
        masses.append(_hull_area(grads))
    if not points:
        return AtomicMeasure(np.zeros((0, 2)), np.zeros(0))
    return AtomicMeasure(np.array(points), np.array(masses))


def gradient_hull_area(u: PLConvexFunction) -> float:
    """Area of the convex hull of all piece gradients."""
    if len(u.gradients) < 3:
        return 0.0
    return _hull_area(u.gradients)


# ── Mass divergence ─────────────────────────────────────────────────────

@dataclass(frozen=True)
class MassRow:
    h: float
    mass: float
    ratio: float | None


def power_transform(u: GridFunction, alpha: float) -> GridFunction:
    """``-(-u)^alpha``; still convex and zero on the boundary for ``0 < alpha <= 1``."""
    return u.with_values(-np.clip(-u.values, 0.0, None) ** alpha)


def mass_divergence_probe(
    domain: ConvexDomain,
    nu: MeasureSpec,
    alpha: float,
    h_list: list[float] | tuple[float, ...],
    width: int = 2,
    solver: SolverOptions | None = None,
) -> list[MassRow]:
    """Total discrete mass of ``-(-u)^alpha`` for the solution ``u`` of ``M(u) = nu`` on each grid."""
    if not 0 < alpha <= 1:
        raise InvalidSpec(f"alpha must lie in (0, 1], got {alpha}")

    def one(h: float) -> float:
        grid = discretize(domain, h, width)
        base = solve_dirichlet(grid, nu.density(grid), options=solver)
        return total_mass(power_transform(base, alpha))

    with ThreadPoolExecutor(max_workers=max(1, min(worker_count(), len(h_list)))) as pool:
        masses = list(pool.map(one, h_list))
    rows = []
    for idx, (h, mass) in enumerate(zip(h_list, masses)):
        ratio = mass / masses[idx - 1] if idx else None
        rows.append(MassRow(h=float(h), mass=mass, ratio=ratio))
        logger.info("mass divergence alpha=%g h=%g mass=%.6g ratio=%s", alpha, h, mass, ratio)
    return rows


# ── Toric identity in one variable ──────────────────────────────────────

def calibrate_ddc() -> float:
    """Constant ``c`` making ``c * int_annulus Laplacian(x^2 o log|z|) = int_0^1 (x^2)''``."""
    radial, _ = quad(lambda rho: (2.0 / rho**2) * rho, 1.0, math.e)
    return 2.0 / (2 * math.pi * radial)


DDC_NORMALIZATION = calibrate_ddc()


@dataclass(frozen=True)
class ToricReport:
    lhs: float
    rhs: float
    abs_diff: float


def _second_derivative(u: Callable[[np.ndarray], np.ndarray], x: np.ndarray | float, step: float = 1e-4):
    return (u(x + step) - 2 * u(x) + u(x - step)) / step**2


def toric_check_1d(
    u: Callable[[np.ndarray], np.ndarray],
    chi: Callable[[np.ndarray], np.ndarray],
    a: float = 0.0,
    b: float = 1.0,
    n_rho: int = 256,
    n_theta: int = 256,
) -> ToricReport:
    """Compare ``int chi u''`` on ``(a, b)`` with the annulus integral of ``chi(log|z|) ddc(u(log|z|))``."""
    rhs, _ = quad(lambda x: float(chi(x) * _second_derivative(u, x)), a, b, limit=200)

    r_in, r_out = math.exp(a), math.exp(b)
    d_rho = (r_out - r_in) / n_rho
    d_theta = 2 * math.pi / n_theta
    rho = r_in + (np.arange(n_rho) + 0.5) * d_rho
    theta = np.arange(n_theta) * d_theta

    def phi(radius: np.ndarray) -> np.ndarray:
        z = radius[:, None] * np.exp(1j * theta[None, :])
        return u(np.log(np.abs(z)))

    center, outer, inner = phi(rho), phi(rho + d_rho), phi(rho - d_rho)
    laplacian = (
        (outer - 2 * center + inner) / d_rho**2
        + (outer - inner) / (2 * d_rho * rho[:, None])
        + (np.roll(center, -1, axis=1) - 2 * center + np.roll(center, 1, axis=1)) / (rho[:, None] * d_theta) ** 2
    )
    weight = chi(np.log(rho))[:, None] * rho[:, None] * d_rho * d_theta
    lhs = DDC_NORMALIZATION * float(np.sum(weight * laplacian))
    return ToricReport(lhs=lhs, rhs=float(rhs), abs_diff=abs(lhs - float(rhs)))


def toric_convergence(
    u: Callable[[np.ndarray], np.ndarray],
    chi: Callable[[np.ndarray], np.ndarray],
    sizes: tuple[int, ...] = (64, 128, 256),
    a: float = 0.0,
    b: float = 1.0,
) -> tuple[list[ToricReport], float]:
    """Reports on successively finer polar grids and the observed order of the last refinement."""
    reports = [toric_check_1d(u, chi, a, b, n, n) for n in sizes]
    e1, e2 = reports[-2].abs_diff, reports[-1].abs_diff
    order = math.log(e1 / e2, sizes[-1] / sizes[-2]) if e1 > 0 and e2 > 0 else math.inf
    return reports, order
