"""Convex domains, their Cartesian discretization and right-hand measures.

A :class:`ConvexDomain` is one of four primitives (interval, disc, box,
polygon). :func:`discretize` lays a uniform lattice anchored at the lower
corner of the bounding box over it, keeps the strictly interior points and
records, for every node and every stencil direction, where the two arms
of the centered second difference end: on an interior neighbor or on the
boundary at an exactly computed intercept.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Callable, Literal

import numpy as np
from scipy import sparse

from maeigen.errors import DomainError, GridError, InvalidSpec, NegativeDensity
from maeigen.expressions import Expression, compile_expression

if TYPE_CHECKING:
    from maeigen.ma_operator import GridFunction

logger = logging.getLogger(__name__)

DomainKind = Literal["interval", "disc", "box", "polygon"]


# ── Domains ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ConvexDomain:
    """Bounded convex domain in dimension 1 or 2.

    Polygons and boxes are handled through their outward half-planes
    ``normal . x <= offset``; the disc through its center and radius.
    """

    kind: DomainKind
    dimension: int
    lo: tuple[float, ...] = ()
    hi: tuple[float, ...] = ()
    center: tuple[float, ...] = ()
    radius: float = 0.0
    vertices: tuple[tuple[float, float], ...] = ()

    @classmethod
    def interval(cls, a: float, b: float) -> ConvexDomain:
        if not a < b:
            raise DomainError(f"interval needs a < b, got a={a}, b={b}")
        return cls(kind="interval", dimension=1, lo=(float(a),), hi=(float(b),))

    @classmethod
    def disc(cls, cx: float, cy: float, radius: float) -> ConvexDomain:
        if not radius > 0:
            raise DomainError(f"disc radius must be positive, got {radius}")
        return cls(kind="disc", dimension=2, center=(float(cx), float(cy)), radius=float(radius))

    @classmethod
    def box(cls, lx: float, ly: float, ux: float, uy: float) -> ConvexDomain:
        if not (lx < ux and ly < uy):
            raise DomainError(f"box needs lo < hi componentwise, got lo=({lx}, {ly}) hi=({ux}, {uy})")
        corners = ((lx, ly), (ux, ly), (ux, uy), (lx, uy))
        return cls(
            kind="box",
            dimension=2,
            lo=(float(lx), float(ly)),
            hi=(float(ux), float(uy)),
            vertices=tuple((float(x), float(y)) for x, y in corners),
        )

    @classmethod
    def polygon(cls, vertices: list[tuple[float, float]] | np.ndarray) -> ConvexDomain:
        pts = np.asarray(vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise DomainError("polygon needs at least three (x, y) vertices")
        x, y = pts.T
        orientation = np.sign(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
        if orientation == 0:
            raise DomainError("polygon has zero area")
        # vertex indices refer to the input order
        bad = np.flatnonzero(orientation * _turn_crosses(pts) <= 0)
        if bad.size:
            index = int(bad[0])
            raise DomainError(
                f"polygon is not strictly convex at vertex {index} {tuple(float(c) for c in pts[index])}",
                vertex=index,
            )
        if orientation < 0:
            pts = pts[::-1].copy()
        crosses = _turn_crosses(pts)
        edges = np.roll(pts, -1, axis=0) - pts
        turning = np.sum(np.arctan2(crosses, np.einsum("ij,ij->i", np.roll(edges, 1, axis=0), edges)))
        if not math.isclose(turning, 2 * math.pi, rel_tol=1e-9):
            raise DomainError("polygon boundary winds more than once")
        return cls(
            kind="polygon",
            dimension=2,
            vertices=tuple((float(x), float(y)) for x, y in pts),
        )

    # geometry ------------------------------------------------------------

    @cached_property
    def half_planes(self) -> tuple[np.ndarray, np.ndarray]:
        """Outward unit normals ``(k, d)`` and offsets ``(k,)``; empty for the disc."""
        if self.kind == "interval":
            return np.array([[-1.0], [1.0]]), np.array([-self.lo[0], self.hi[0]])
        if self.kind == "disc":
            return np.zeros((0, 2)), np.zeros(0)
        pts = np.asarray(self.vertices)
        edges = np.roll(pts, -1, axis=0) - pts
        normals = np.column_stack([edges[:, 1], -edges[:, 0]])
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        offsets = np.einsum("ij,ij->i", normals, pts)
        return normals, offsets

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "disc":
            c = np.asarray(self.center)
            return c - self.radius, c + self.radius
        if self.kind == "polygon":
            pts = np.asarray(self.vertices)
            return pts.min(axis=0), pts.max(axis=0)
        return np.asarray(self.lo), np.asarray(self.hi)

    @cached_property
    def diameter(self) -> float:
        if self.kind == "disc":
            return 2 * self.radius
        if self.kind == "interval":
            return self.hi[0] - self.lo[0]
        pts = np.asarray(self.vertices)
        return float(np.max(np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)))

    @cached_property
    def volume(self) -> float:
        if self.kind == "disc":
            return math.pi * self.radius**2
        if self.kind == "interval":
            return self.hi[0] - self.lo[0]
        x, y = np.asarray(self.vertices).T
        return float(0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))

    @cached_property
    def centroid(self) -> np.ndarray:
        if self.kind == "disc":
            return np.asarray(self.center)
        if self.kind == "interval":
            return np.array([(self.lo[0] + self.hi[0]) / 2])
        x, y = np.asarray(self.vertices).T
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = cross.sum() / 2
        return np.array([np.sum((x + xn) * cross), np.sum((y + yn) * cross)]) / (6 * area)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        """Negative inside; equal to minus the distance to the boundary for inside points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, self.dimension)
        if self.kind == "disc":
            return np.linalg.norm(pts - np.asarray(self.center), axis=1) - self.radius
        normals, offsets = self.half_planes
        return np.max(pts @ normals.T - offsets, axis=1)

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Strict membership with a margin ``tol``."""
        return self.signed_distance(points) < -tol

    def distance_to_boundary(self, x: np.ndarray | tuple[float, ...] | float) -> float:
        sd = float(self.signed_distance(np.asarray(x, dtype=float).reshape(1, self.dimension))[0])
        if sd > 1e-12 * self.diameter:
            raise DomainError(f"point {x} lies outside the {self.kind}")
        return max(-sd, 0.0)

    def exit_parameter(self, points: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """First ``t >= 0`` with ``points + t * direction`` on the boundary."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.asarray(direction, dtype=float)
        if self.kind == "disc":
            rel = pts - np.asarray(self.center)
            a = d @ d
            b = rel @ d
            c = np.einsum("ij,ij->i", rel, rel) - self.radius**2
            return (-b + np.sqrt(np.maximum(b * b - a * c, 0.0))) / a
        normals, offsets = self.half_planes
        speed = normals @ d
        slack = offsets[None, :] - pts @ normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(speed[None, :] > 0, slack / speed[None, :], np.inf)
        return np.maximum(t.min(axis=1), 0.0)

    def gauge(self, points: np.ndarray, apex: np.ndarray | None = None) -> np.ndarray:
        """Minkowski gauge about ``apex``: 0 at the apex, 1 on the boundary, linear along rays."""
        pts = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, self.dimension)
        x0 = self.centroid if apex is None else np.asarray(apex, dtype=float)
        rel = pts - x0
        if self.kind == "disc":
            rel_c = x0 - np.asarray(self.center)
            a = np.einsum("ij,ij->i", rel, rel)
            b = rel @ rel_c
            c = rel_c @ rel_c - self.radius**2
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (-b + np.sqrt(np.maximum(b * b - a * c, 0.0))) / a
                return np.where(a > 0, 1.0 / t, 0.0)
        normals, offsets = self.half_planes
        return np.max((rel @ normals.T) / (offsets - normals @ x0), axis=1).clip(min=0.0)

    def describe(self) -> str:
        if self.kind == "interval":
            return f"interval {self.lo[0]:g} {self.hi[0]:g}"
        if self.kind == "disc":
            return f"disc {self.center[0]:g} {self.center[1]:g} {self.radius:g}"
        if self.kind == "box":
            return f"box {self.lo[0]:g} {self.lo[1]:g} {self.hi[0]:g} {self.hi[1]:g}"
        return "polygon " + " ".join(f"{x:g} {y:g}" for x, y in self.vertices)


def _turn_crosses(pts: np.ndarray) -> np.ndarray:
    """Cross product of incoming and outgoing edge at every vertex."""
    incoming = pts - np.roll(pts, 1, axis=0)
    outgoing = np.roll(pts, -1, axis=0) - pts
    return incoming[:, 0] * outgoing[:, 1] - incoming[:, 1] * outgoing[:, 0]


_DOMAIN_ARITY = {"interval": 2, "disc": 3, "box": 4}


def build_domain(spec: str) -> ConvexDomain:
    """Parse ``disc cx cy r``, ``box lx ly ux uy``, ``interval a b`` or ``polygon x1 y1 ...``."""
    tokens = spec.replace(",", " ").split()
    if not tokens:
        raise DomainError("empty domain description")
    kind, raw = tokens[0].lower(), tokens[1:]
    try:
        values = [float(tok) for tok in raw]
    except ValueError as exc:
        raise DomainError(f"non-numeric parameter in domain {spec!r}") from exc

    if kind in _DOMAIN_ARITY:
        if len(values) != _DOMAIN_ARITY[kind]:
            raise DomainError(f"{kind} expects {_DOMAIN_ARITY[kind]} numbers, got {len(values)}")
        return getattr(ConvexDomain, kind)(*values)
    if kind == "polygon":
        if len(values) % 2:
            raise DomainError("polygon expects an even number of coordinates")
        return ConvexDomain.polygon(list(zip(values[::2], values[1::2])))
    raise DomainError(f"unknown domain kind {kind!r}; expected interval, disc, box or polygon")


def distance_to_boundary(domain: ConvexDomain, x: np.ndarray | tuple[float, ...] | float) -> float:
    """Exact Euclidean distance from an inside point to the boundary."""
    return domain.distance_to_boundary(x)


# ── Stencils and grids ──────────────────────────────────────────────────

def stencil_directions(width: int, dimension: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Direction vectors and the index pairs ``(v, v_perp)`` built from them.

    In 2D ``v`` ranges over first-quadrant coprime vectors with sup-norm at
    most ``width``, ordered by length then angle; ``v_perp`` is ``v`` rotated
    by 90 degrees. In 1D there is one direction and one "pair" of size one.
    """
    if width < 1:
        raise GridError(f"stencil width must be >= 1, got {width}")
    if dimension == 1:
        return np.array([[1]]), np.array([[0]])
    base = [
        (a, b)
        for a in range(1, width + 1)
        for b in range(0, width + 1)
        if math.gcd(a, b) == 1
    ]
    base.sort(key=lambda v: (v[0] ** 2 + v[1] ** 2, math.atan2(v[1], v[0])))
    dirs = []
    for a, b in base:
        dirs.extend([(a, b), (-b, a)])
    pairs = np.arange(len(dirs)).reshape(-1, 2)
    return np.asarray(dirs, dtype=np.int64), pairs


@dataclass(frozen=True, eq=False)
class Grid:
    """Interior lattice nodes of a domain with the stencil geometry.

    ``neighbor[i, j, s]`` is the node reached from node ``i`` by one step
    along ``+dirs[j]`` (``s=0``) or ``-dirs[j]`` (``s=1``), or ``-1`` when the
    arm hits the boundary first; ``arm[i, j, s]`` is the arm length in units
    of that full step and ``exit_points`` the corresponding end point.
    """

    domain: ConvexDomain
    h: float
    width: int
    origin: np.ndarray
    lattice: np.ndarray
    nodes: np.ndarray
    dirs: np.ndarray
    pairs: np.ndarray
    neighbor: np.ndarray
    arm: np.ndarray
    exit_points: np.ndarray
    interior_index: dict[tuple[int, ...], int] = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def cell_volume(self) -> float:
        return self.h**self.dimension

    @cached_property
    def step_lengths(self) -> np.ndarray:
        """Euclidean length of one full step along each direction."""
        return self.h * np.linalg.norm(self.dirs, axis=1)

    @cached_property
    def coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights ``(wf, wb)`` of the unequal-arm second difference, shape ``(N, D)``.

        ``Delta_j u = wf * (u_f - u) + wb * (u_b - u)``, exact on quadratics.
        """
        alpha = self.arm * self.step_lengths[None, :, None]
        af, ab = alpha[..., 0], alpha[..., 1]
        total = af + ab
        return 2.0 / (total * af), 2.0 / (total * ab)

    @cached_property
    def difference_operators(self) -> list[sparse.csr_matrix]:
        """Sparse ``A_j`` with ``Delta_j u = A_j @ u + (boundary part)`` for zero-extended neighbors."""
        wf, wb = self.coefficients
        rows = np.arange(self.n_nodes)
        ops = []
        for j in range(len(self.dirs)):
            r, c, v = [rows], [rows], [-(wf[:, j] + wb[:, j])]
            for s, w in ((0, wf[:, j]), (1, wb[:, j])):
                nb = self.neighbor[:, j, s]
                keep = nb >= 0
                r.append(rows[keep])
                c.append(nb[keep])
                v.append(w[keep])
            ops.append(
                sparse.csr_matrix(
                    (np.concatenate(v), (np.concatenate(r), np.concatenate(c))),
                    shape=(self.n_nodes, self.n_nodes),
                )
            )
        return ops

    def boundary_part(self, boundary_values: np.ndarray) -> np.ndarray:
        """Contribution ``(N, D)`` of the boundary data to each second difference."""
        wf, wb = self.coefficients
        outside = self.neighbor < 0
        return (
            wf * np.where(outside[..., 0], boundary_values[..., 0], 0.0)
            + wb * np.where(outside[..., 1], boundary_values[..., 1], 0.0)
        )

    @cached_property
    def full_stencil(self) -> np.ndarray:
        """True at nodes where every arm ends on an interior neighbor."""
        return np.all(self.neighbor >= 0, axis=(1, 2))

    def node_of(self, lattice_point: tuple[int, ...]) -> int:
        return self.interior_index.get(tuple(int(k) for k in lattice_point), -1)

    def boundary_values(self, data: Callable[[np.ndarray], np.ndarray] | None) -> np.ndarray:
        """Boundary data at every arm end, zero where the arm ends inside."""
        values = np.zeros(self.neighbor.shape)
        if data is None:
            return values
        mask = self.neighbor < 0
        values[mask] = np.asarray(data(self.exit_points[mask]), dtype=float)
        return values

    def integrate(self, values: np.ndarray) -> float:
        """Midpoint quadrature over the interior nodes."""
        return float(np.sum(values) * self.cell_volume)


def discretize(domain: ConvexDomain, h: float, width: int = 2) -> Grid:
    """Build the grid of strictly interior lattice points of ``domain`` with spacing ``h``."""
    if not h > 0:
        raise GridError(f"h must be positive, got {h}")
    if h > domain.diameter / 4 * (1 + 1e-12):
        raise GridError(f"h={h:g} too coarse for a domain of diameter {domain.diameter:g}; need h <= diameter/4")
    dirs, pairs = stencil_directions(width, domain.dimension)

    lo, hi = domain.bounds()
    counts = np.floor((hi - lo) / h + 1e-9).astype(int) + 1
    axes = [np.arange(c) for c in counts]
    mesh = np.meshgrid(*axes[::-1], indexing="ij")
    lattice_all = np.column_stack([m.ravel() for m in mesh[::-1]])
    points_all = lo + lattice_all * h
    inside = domain.contains(points_all, tol=1e-12 * domain.diameter)
    lattice = lattice_all[inside]
    nodes = points_all[inside]
    if len(nodes) == 0:
        raise GridError(f"no interior node for h={h:g} on {domain.describe()}")

    index_grid = np.full(tuple(counts[::-1]), -1, dtype=np.int64)
    index_grid[tuple(lattice[:, ::-1].T)] = np.arange(len(nodes))

    n_nodes, n_dirs = len(nodes), len(dirs)
    neighbor = np.full((n_nodes, n_dirs, 2), -1, dtype=np.int64)
    arm = np.ones((n_nodes, n_dirs, 2))
    exit_points = np.zeros((n_nodes, n_dirs, 2, domain.dimension))
    for j, direction in enumerate(dirs):
        for s, sign in enumerate((1, -1)):
            step = sign * direction
            target = lattice + step
            in_box = np.all((target >= 0) & (target < counts), axis=1)
            found = np.full(n_nodes, -1, dtype=np.int64)
            found[in_box] = index_grid[tuple(target[in_box][:, ::-1].T)]
            neighbor[:, j, s] = found
            outside = found < 0
            if np.any(outside):
                t = domain.exit_parameter(nodes[outside], step * h)
                arm[outside, j, s] = np.clip(t, 1e-12, 1.0)
            exit_points[:, j, s] = nodes + arm[:, j, s, None] * (step * h)

    interior_index = {tuple(int(k) for k in p): i for i, p in enumerate(lattice)}
    logger.debug("discretized %s: h=%g W=%d nodes=%d directions=%d", domain.describe(), h, width, n_nodes, n_dirs)
    return Grid(
        domain=domain,
        h=float(h),
        width=width,
        origin=lo,
        lattice=lattice,
        nodes=nodes,
        dirs=dirs,
        pairs=pairs,
        neighbor=neighbor,
        arm=arm,
        exit_points=exit_points,
        interior_index=interior_index,
    )


# ── Measures ────────────────────────────────────────────────────────────

MeasureKind = Literal["constant", "radial_power", "expression", "product_of_hessian"]


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """Right-hand measure given by its density with respect to Lebesgue measure."""

    kind: MeasureKind
    c: float = 1.0
    beta: float = 0.0
    center: tuple[float, ...] | None = None
    formula: Expression | Callable[[np.ndarray], np.ndarray] | None = None
    source: GridFunction | None = None
    label: str = ""

    @classmethod
    def constant(cls, c: float = 1.0) -> MeasureSpec:
        return cls(kind="constant", c=float(c), label=f"const:{c:g}")

    @classmethod
    def lebesgue(cls) -> MeasureSpec:
        return cls(kind="constant", c=1.0, label="lebesgue")

    @classmethod
    def radial_power(cls, c: float, beta: float, center: tuple[float, ...] | None = None) -> MeasureSpec:
        """Density ``c * |x - center|**(-beta)``; integrable when ``beta < n``."""
        return cls(kind="radial_power", c=float(c), beta=float(beta), center=center, label=f"radial:{c:g},{beta:g}")

    @classmethod
    def expression(cls, formula: str | Callable[[np.ndarray], np.ndarray]) -> MeasureSpec:
        if isinstance(formula, str):
            return cls(kind="expression", formula=compile_expression(formula, ("x", "y", "r")), label=f"expr:{formula}")
        return cls(kind="expression", formula=formula, label="expr:<callable>")

    @classmethod
    def product_of_hessian(cls, v: GridFunction) -> MeasureSpec:
        """Use the discrete Monge-Ampere density of a convex grid function as the measure."""
        return cls(kind="product_of_hessian", source=v, label="hessian")

    def density(self, grid: Grid) -> np.ndarray:
        """Density at the grid nodes; nonnegative with positive total mass."""
        if self.kind == "constant":
            values = np.full(grid.n_nodes, self.c)
        elif self.kind == "radial_power":
            values = self._radial_power(grid)
        elif self.kind == "expression":
            values = np.asarray(self.formula(grid.nodes), dtype=float).reshape(grid.n_nodes)
        else:
            from maeigen.ma_operator import ma_apply

            if self.source is None or self.source.grid is not grid:
                raise GridError("product_of_hessian source lives on a different grid")
            values = ma_apply(self.source).values

        if not np.all(np.isfinite(values)):
            raise InvalidSpec(f"measure {self.label} has non-finite density values")
        if np.any(values < 0):
            worst = int(np.argmin(values))
            raise NegativeDensity(f"measure {self.label} is negative at node {worst} ({values[worst]:.3e})")
        if not grid.integrate(values) > 0:
            raise InvalidSpec(f"measure {self.label} has zero total mass on this grid")
        return values

    def _radial_power(self, grid: Grid) -> np.ndarray:
        n = grid.dimension
        if not self.beta < n:
            raise InvalidSpec(f"radial_power needs beta < {n} for integrability, got {self.beta}")
        center = np.zeros(n) if self.center is None else np.asarray(self.center, dtype=float)
        dist = np.linalg.norm(grid.nodes - center, axis=1)
        values = np.empty(grid.n_nodes)
        at_center = dist < 1e-12 * grid.h
        with np.errstate(divide="ignore"):
            values[~at_center] = self.c * dist[~at_center] ** (-self.beta)
        # cell average over the ball with the cell's volume
        if n == 1:
            rho = grid.h / 2
            values[at_center] = self.c * rho ** (-self.beta) / (1 - self.beta)
        else:
            rho = grid.h / math.sqrt(math.pi)
            values[at_center] = self.c * 2 * rho ** (-self.beta) / (2 - self.beta)
        return values


def parse_measure(text: str) -> MeasureSpec:
    """``lebesgue``, ``const:c``, ``radial:c,beta[,cx[,cy]]`` or ``expr:<formula>``."""
    text = text.strip()
    kind, _, arg = text.partition(":")
    kind = kind.lower()
    try:
        if kind == "lebesgue" and not arg:
            return MeasureSpec.lebesgue()
        if kind in ("const", "constant"):
            return MeasureSpec.constant(float(arg))
        if kind == "radial":
            parts = [float(p) for p in arg.split(",")]
            if len(parts) < 2:
                raise InvalidSpec("radial measure needs c,beta")
            center = tuple(parts[2:]) or None
            return MeasureSpec.radial_power(parts[0], parts[1], center)
    except ValueError as exc:
        raise InvalidSpec(f"cannot parse measure {text!r}: {exc}") from exc
    if kind == "expr" and arg:
        return MeasureSpec.expression(arg)
    raise InvalidSpec(f"unknown measure {text!r}; expected lebesgue, const:c, radial:c,beta or expr:<formula>")
