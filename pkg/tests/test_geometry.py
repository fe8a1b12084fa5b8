"""Geometry core: hulls, vertex enumeration, exact Minkowski sums, volumes."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexsum.errors import (
    DegenerateGeometryError,
    EmptyPolytopeError,
    UnboundedPolytopeError,
)
from flexsum.geometry import (
    AlignedBox,
    HalfSpace,
    HPolytope,
    VPolygon,
    contains,
    convex_hull_2d,
    intersect_halfspace,
    mc_volume,
    minkowski_sum_2d_exact,
    polygon_area,
    union_area_2d,
    union_volume_boxes,
    vertex_enum_2d,
)

UNIT_SQUARE = HPolytope(
    np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
    np.array([1.0, 0.0, 1.0, 0.0]),
)
TRIANGLE = HPolytope(
    np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]]),
    np.array([0.0, 0.0, 1.0]),
)


def random_polygon(rng, n_max=10):
    n = int(rng.integers(3, n_max + 1))
    while True:
        pts = rng.normal(size=(n + 4, 2)) * rng.uniform(0.5, 3.0)
        try:
            return convex_hull_2d(pts)
        except DegenerateGeometryError:
            continue


# ---------------------------------------------------------------------- types


def test_hpolytope_rejects_empty():
    with pytest.raises(EmptyPolytopeError):
        HPolytope(np.array([[1.0], [-1.0]]), np.array([-2.0, 1.0]))


def test_hpolytope_rejects_unbounded():
    with pytest.raises(UnboundedPolytopeError):
        HPolytope(np.array([[-1.0, 0.0], [0.0, -1.0]]), np.array([0.0, 0.0]))


def test_hpolytope_rejects_zero_row():
    with pytest.raises(ValueError):
        HPolytope(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([1.0, 1.0]))


def test_halfspace_requires_nonzero_normal():
    with pytest.raises(ValueError):
        HalfSpace(np.zeros(2), 1.0)


def test_vpolygon_cleanup_and_orientation():
    # Clockwise input with duplicates and a collinear midpoint.
    poly = VPolygon([(0, 0), (0, 1), (0.5, 1), (1, 1), (1, 0), (1, 0), (0, 0)])
    assert len(poly) == 4
    assert poly.area == pytest.approx(1.0)
    assert tuple(poly.vertices[0]) == (0.0, 0.0)


def test_aligned_box_basics():
    box = AlignedBox([0.0, -1.0], [2.0, 1.0])
    assert box.volume == pytest.approx(4.0)
    assert box.contains([1.0, 0.0])
    assert not box.contains([3.0, 0.0])
    assert len(box.corners()) == 4
    assert box.to_polygon().area == pytest.approx(4.0)
    # point box is allowed
    assert AlignedBox([1.0], [1.0]).volume == 0.0


# ----------------------------------------------------------------- membership


def test_contains_inside_outside_boundary():
    assert contains(UNIT_SQUARE, (0.5, 0.5))
    assert not contains(UNIT_SQUARE, (1.5, 0.0))
    assert contains(UNIT_SQUARE, (1.0 + 1e-10, 0.0), tol=1e-9)


def test_contains_dimension_mismatch():
    with pytest.raises(ValueError):
        contains(UNIT_SQUARE, (0.5, 0.5, 0.5))


# ----------------------------------------------------------- vertex enumeration


def test_vertex_enum_square():
    poly = vertex_enum_2d(UNIT_SQUARE)
    expected = {(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)}
    got = {tuple(np.round(v, 9)) for v in poly.vertices}
    assert got == expected


def test_vertex_enum_triangle_ignores_redundant_row():
    A = np.vstack([TRIANGLE.A, [[1.0, 0.0]]])  # x <= 5 is redundant
    b = np.concatenate([TRIANGLE.b, [5.0]])
    poly = vertex_enum_2d(HPolytope(A, b))
    got = {tuple(np.round(v, 9)) for v in poly.vertices}
    assert got == {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)}


def test_vertex_enum_errors():
    seg = HPolytope.trusted(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]), np.array([1, 0, 0, 0]))
    with pytest.raises(DegenerateGeometryError):
        vertex_enum_2d(seg)
    empty = HPolytope.trusted(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]), np.array([-1, 0, 1, 0]))
    with pytest.raises(EmptyPolytopeError):
        vertex_enum_2d(empty)


def test_vertex_enum_round_trip_recontains_vertices():
    rng = np.random.default_rng(11)
    for _ in range(25):
        polygon = random_polygon(rng)
        hrep = polygon.to_hpolytope()
        back = vertex_enum_2d(hrep)
        for v in polygon.vertices:
            assert back.contains(v, tol=1e-7)
        assert back.area == pytest.approx(polygon.area, rel=1e-9)


# ------------------------------------------------------------------ convex hull


def test_hull_square_with_center():
    hull = convex_hull_2d([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
    assert len(hull) == 4
    assert hull.area == pytest.approx(1.0)


def test_hull_collinear_mid_edge_dropped():
    hull = convex_hull_2d([(0, 0), (2, 0), (1, 1), (0, 2), (2, 2)])
    assert len(hull) == 4
    assert hull.area == pytest.approx(4.0)


def test_hull_two_offset_boxes():
    # Hand enumeration: the two diagonal flanks each absorb a corner, so the
    # hull of the 8 corners has 6 vertices.
    corners = list(AlignedBox([0.0, 0.0], [1.0, 1.0]).corners()) + list(
        AlignedBox([0.5, 0.5], [1.5, 1.5]).corners()
    )
    hull = convex_hull_2d(corners)
    expected = {(0, 0), (1, 0), (1.5, 0.5), (1.5, 1.5), (0.5, 1.5), (0, 1)}
    assert {tuple(np.round(v, 9)) for v in hull.vertices} == expected


def test_hull_all_collinear_raises():
    with pytest.raises(DegenerateGeometryError):
        convex_hull_2d([(0, 0), (1, 1), (2, 2), (3, 3)])


# ------------------------------------------------------------------------ area


def test_polygon_areas():
    assert polygon_area(VPolygon([(0, 0), (1, 0), (0, 1)])) == pytest.approx(0.5)
    assert polygon_area(VPolygon([(0, 0), (1, 0), (1, 1), (0, 1)])) == pytest.approx(1.0)
    angles = np.arange(6) * 2 * np.pi / 6
    hexagon = VPolygon(np.stack([np.cos(angles), np.sin(angles)], axis=1))
    assert polygon_area(hexagon) == pytest.approx(0.5 * 6 * np.sin(2 * np.pi / 6), abs=1e-12)


# ------------------------------------------------------------- Minkowski oracle


def test_msum_two_unit_squares():
    sq = VPolygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    out = minkowski_sum_2d_exact(sq, sq)
    assert out.area == pytest.approx(4.0)
    assert len(out) == 4


def test_msum_square_plus_diamond_is_octagon():
    sq = VPolygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    diamond = VPolygon([(1, 0), (0, 1), (-1, 0), (0, -1)])
    out = minkowski_sum_2d_exact(sq, diamond)
    assert len(out) == 8
    brute = convex_hull_2d([u + v for u in sq.vertices for v in diamond.vertices])
    assert out.area == pytest.approx(brute.area, abs=1e-12)
    assert out.area == pytest.approx(7.0)


@settings(deadline=None, max_examples=60)
@given(seed=st.integers(0, 2**32 - 1))
def test_msum_matches_hull_of_pairwise_sums(seed):
    rng = np.random.default_rng(seed)
    p1, p2 = random_polygon(rng), random_polygon(rng)
    fast = minkowski_sum_2d_exact(p1, p2)
    brute = convex_hull_2d([u + v for u in p1.vertices for v in p2.vertices])
    assert len(fast) <= len(p1) + len(p2)
    assert fast.area == pytest.approx(brute.area, rel=1e-10, abs=1e-10)
    assert len(fast) == len(brute)
    assert np.allclose(fast.vertices, brute.vertices, atol=1e-8)


@settings(deadline=None, max_examples=30)
@given(seed=st.integers(0, 2**32 - 1))
def test_msum_commutative_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_polygon(rng, 8) for _ in range(3))
    ab = minkowski_sum_2d_exact(a, b)
    ba = minkowski_sum_2d_exact(b, a)
    assert abs(ab.area - ba.area) < 1e-9
    left = minkowski_sum_2d_exact(ab, c)
    right = minkowski_sum_2d_exact(a, minkowski_sum_2d_exact(b, c))
    assert abs(left.area - right.area) < 1e-9


# ---------------------------------------------------------------- Monte Carlo


def test_mc_volume_unit_cube_exact():
    eye = np.eye(3)
    cube = HPolytope(np.vstack([eye, -eye]), np.array([1.0, 1, 1, 0, 0, 0]))
    assert mc_volume(cube, 5_000, seed=3) == pytest.approx(1.0)


def test_mc_volume_simplex():
    eye = np.eye(3)
    simplex = HPolytope(np.vstack([-eye, np.ones((1, 3))]), np.array([0.0, 0, 0, 1.0]))
    est = mc_volume(simplex, 1_000_000, seed=42)
    assert est == pytest.approx(1.0 / 6.0, abs=0.002)


def test_mc_volume_matches_polygon_area_within_3_sigma():
    rng = np.random.default_rng(7)
    for _ in range(5):
        polygon = random_polygon(rng)
        hrep = polygon.to_hpolytope()
        n = 200_000
        est = mc_volume(hrep, n, seed=int(rng.integers(1 << 30)))
        box = hrep.bounding_box()
        p = polygon.area / box.volume
        sigma = box.volume * np.sqrt(p * (1 - p) / n)
        assert abs(est - polygon.area) <= 3 * sigma + 1e-12


# ------------------------------------------------------------ halfspace slicing


def test_intersect_halfspace_ok_empty_degenerate():
    half = HalfSpace(np.array([1.0, 0.0]), 0.5)
    sliced, status = intersect_halfspace(UNIT_SQUARE, half)
    assert status == "ok"
    got = vertex_enum_2d(sliced)
    assert got.area == pytest.approx(0.5)

    _, status = intersect_halfspace(UNIT_SQUARE, HalfSpace(np.array([1.0, 0.0]), -1.0))
    assert status == "empty"

    _, status = intersect_halfspace(UNIT_SQUARE, HalfSpace(np.array([1.0, 0.0]), 0.0))
    assert status == "degenerate"


# ------------------------------------------------------------------ box unions


def test_union_area_overlapping_boxes():
    boxes = [AlignedBox([0.0, 0.0], [2.0, 1.0]), AlignedBox([1.0, 0.0], [3.0, 2.0])]
    # 2 + 4 - overlap(1x1)
    assert union_area_2d(boxes) == pytest.approx(5.0)
    assert union_volume_boxes(boxes) == pytest.approx(5.0)


def test_union_volume_many_boxes_mc_close_to_sweep():
    rng = np.random.default_rng(5)
    boxes = []
    for _ in range(8):
        lo = rng.uniform(0, 2, size=2)
        boxes.append(AlignedBox(lo, lo + rng.uniform(0.3, 1.5, size=2)))
    exact = union_area_2d(boxes)
    est = union_volume_boxes(boxes, n_samples=400_000, seed=9)
    assert est == pytest.approx(exact, rel=0.02)
