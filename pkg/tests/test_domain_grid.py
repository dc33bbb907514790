from __future__ import annotations

import math

import numpy as np
import pytest

from maeigen.domain_grid import (
    ConvexDomain,
    MeasureSpec,
    build_domain,
    discretize,
    distance_to_boundary,
    parse_measure,
    stencil_directions,
)
from maeigen.errors import DomainError, GridError, InvalidSpec, NegativeDensity

PENTAGON = [(0.0, 0.0), (2.0, 0.0), (2.5, 1.0), (1.0, 2.0), (-0.5, 1.0)]


def _sample_inside(domain: ConvexDomain, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo, hi = domain.bounds()
    pts = rng.uniform(lo, hi, size=(4 * count, domain.dimension))
    return pts[domain.contains(pts)][:count]


# ── build_domain ────────────────────────────────────────────────────────

def test_disc_membership() -> None:
    disc = build_domain("disc 0 0 1")
    assert disc.contains(np.array([[0.5, 0.0]]))[0]
    assert not disc.contains(np.array([[1.5, 0.0]]))[0]
    assert disc.volume == pytest.approx(math.pi)


def test_interval_endpoints_have_zero_distance() -> None:
    interval = build_domain("interval 0 1")
    assert interval.dimension == 1
    assert distance_to_boundary(interval, 0.0) == 0.0
    assert distance_to_boundary(interval, 1.0) == 0.0
    assert distance_to_boundary(interval, 0.25) == pytest.approx(0.25)


def test_convex_polygon_is_accepted() -> None:
    square = build_domain("polygon 0 0 1 0 1 1 0 1")
    assert square.kind == "polygon"
    assert square.volume == pytest.approx(1.0)


def test_reflex_polygon_names_the_vertex() -> None:
    with pytest.raises(DomainError) as info:
        build_domain("polygon 0 0 2 0 1 0.5 2 1 0 1")
    assert info.value.vertex == 2


def test_clockwise_reflex_polygon_names_the_reflex_vertex() -> None:
    with pytest.raises(DomainError) as info:
        ConvexDomain.polygon([(0.0, 1.0), (2.0, 1.0), (1.0, 0.5), (2.0, 0.0), (0.0, 0.0)])
    assert info.value.vertex == 2
    assert "(1.0, 0.5)" in str(info.value)


def test_clockwise_polygon_is_reoriented() -> None:
    domain = ConvexDomain.polygon(list(reversed(PENTAGON)))
    assert domain.volume > 0
    assert domain.contains(np.array([[1.0, 1.0]]))[0]


@pytest.mark.parametrize(
    "text",
    ["disc 0 0", "disc 0 0 -1", "hexagon 1 2 3", "interval 1 0", "box 0 0 1 x", "", "polygon 0 0 1"],
)
def test_malformed_domains_raise(text: str) -> None:
    with pytest.raises(DomainError):
        build_domain(text)


def test_distance_examples() -> None:
    assert distance_to_boundary(build_domain("disc 0 0 1"), (0.0, 0.0)) == pytest.approx(1.0)
    assert distance_to_boundary(build_domain("box 0 0 1 1"), (0.5, 0.25)) == pytest.approx(0.25)
    with pytest.raises(DomainError):
        distance_to_boundary(build_domain("disc 0 0 1"), (2.0, 0.0))


@pytest.mark.parametrize("domain", [ConvexDomain.disc(0.0, 0.0, 1.0), ConvexDomain.polygon(PENTAGON)])
def test_distance_is_concave(domain: ConvexDomain) -> None:
    """The boundary distance of a convex domain is concave along chords."""
    pts = _sample_inside(domain, 2000, seed=3)
    x, y = pts[:1000], pts[1000:2000]
    dist = lambda p: -domain.signed_distance(p)  # noqa: E731
    gap = dist((x + y) / 2) - (dist(x) + dist(y)) / 2
    assert gap.min() >= -1e-12


# ── stencils and grids ──────────────────────────────────────────────────

def test_stencil_directions_width_two() -> None:
    dirs, pairs = stencil_directions(2)
    assert len(dirs) == 8
    assert len(pairs) == 4
    for a, b in pairs:
        assert dirs[a] @ dirs[b] == 0
        assert np.abs(dirs[a]).max() <= 2
        assert math.gcd(*np.abs(dirs[a])) == 1
    assert [tuple(d) for d in dirs[:2]] == [(1, 0), (0, 1)]


def test_stencil_directions_width_one_and_1d() -> None:
    dirs, pairs = stencil_directions(1)
    assert len(dirs) == 4 and len(pairs) == 2
    dirs_1d, pairs_1d = stencil_directions(3, dimension=1)
    assert dirs_1d.tolist() == [[1]]
    assert pairs_1d.tolist() == [[0]]
    with pytest.raises(GridError):
        stencil_directions(0)


def test_interval_grid_nodes() -> None:
    grid = discretize(ConvexDomain.interval(0.0, 1.0), 0.25)
    np.testing.assert_allclose(grid.nodes[:, 0], [0.25, 0.5, 0.75])


def test_coarse_disc_grid_has_strict_interior_nodes() -> None:
    grid = discretize(ConvexDomain.disc(0.0, 0.0, 1.0), 0.5, width=1)
    assert grid.n_nodes == 9
    assert np.all(np.linalg.norm(grid.nodes, axis=1) < 1.0)


def test_box_grid_nodes() -> None:
    grid = discretize(ConvexDomain.box(0.0, 0.0, 1.0, 1.0), 0.2)
    assert grid.n_nodes == 16


@pytest.mark.parametrize("h, width", [(0.6, 2), (-0.1, 2), (0.1, 0)])
def test_bad_grid_parameters(h: float, width: int) -> None:
    with pytest.raises(GridError):
        discretize(ConvexDomain.disc(0.0, 0.0, 1.0), h, width)


@pytest.mark.parametrize(
    "domain, h",
    [
        (ConvexDomain.disc(0.0, 0.0, 1.0), 0.1),
        (ConvexDomain.polygon(PENTAGON), 0.07),
        (ConvexDomain.interval(-1.0, 2.0), 0.13),
    ],
)
def test_arms_end_on_neighbors_or_boundary(domain: ConvexDomain, h: float) -> None:
    grid = discretize(domain, h)
    tol = 1e-12 * domain.diameter
    for j, direction in enumerate(grid.dirs):
        for s, sign in enumerate((1, -1)):
            nbr = grid.neighbor[:, j, s]
            arm = grid.arm[:, j, s]
            assert np.all((arm > 0) & (arm <= 1))
            inside = nbr >= 0
            np.testing.assert_array_equal(arm[inside], 1.0)
            np.testing.assert_allclose(
                grid.nodes[nbr[inside]], grid.nodes[inside] + sign * h * direction, atol=tol
            )
            ends = grid.exit_points[~inside, j, s]
            assert np.all(np.abs(domain.signed_distance(ends)) <= tol)


def test_node_count_scales_with_area() -> None:
    disc = ConvexDomain.disc(0.0, 0.0, 1.0)
    counts = [discretize(disc, h).n_nodes for h in (1 / 16, 1 / 32, 1 / 64)]
    for h, count in zip((1 / 16, 1 / 32, 1 / 64), counts):
        assert 0.5 < count * h**2 / math.pi < 2.0
    assert counts[1] >= 3 * counts[0]
    assert counts[2] >= 3 * counts[1]


def test_node_lookup_and_integration(disc_grid_16) -> None:
    grid = disc_grid_16
    center = grid.node_of(tuple(np.rint((np.zeros(2) - grid.origin) / grid.h).astype(int)))
    assert center >= 0
    np.testing.assert_allclose(grid.nodes[center], [0.0, 0.0], atol=1e-14)
    assert grid.node_of((0, 0)) == -1
    assert grid.integrate(np.ones(grid.n_nodes)) == pytest.approx(math.pi, rel=0.1)


# ── measures ────────────────────────────────────────────────────────────

def test_constant_and_expression_densities(disc_grid_16) -> None:
    grid = disc_grid_16
    np.testing.assert_array_equal(MeasureSpec.lebesgue().density(grid), 1.0)
    np.testing.assert_allclose(parse_measure("const:2.5").density(grid), 2.5)
    values = parse_measure("expr:1 + x**2").density(grid)
    np.testing.assert_allclose(values, 1 + grid.nodes[:, 0] ** 2)


def test_negative_density_is_rejected(disc_grid_16) -> None:
    with pytest.raises(NegativeDensity):
        parse_measure("expr:x").density(disc_grid_16)


def test_zero_mass_is_rejected(disc_grid_16) -> None:
    with pytest.raises(InvalidSpec):
        MeasureSpec.constant(0.0).density(disc_grid_16)


def test_radial_power_is_finite_at_the_center(disc_grid_16) -> None:
    values = parse_measure("radial:1,0.5").density(disc_grid_16)
    assert np.all(np.isfinite(values))
    assert values.max() == pytest.approx(2 * (disc_grid_16.h / math.sqrt(math.pi)) ** -0.5 / 1.5)
    with pytest.raises(InvalidSpec):
        MeasureSpec.radial_power(1.0, 2.0).density(disc_grid_16)


@pytest.mark.parametrize("text", ["radial:1", "const:abc", "gaussian", "expr:", "expr:__import__('os')"])
def test_bad_measure_text(text: str) -> None:
    with pytest.raises(InvalidSpec):
        parse_measure(text)
