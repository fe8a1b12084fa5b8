"""Inscribed-box solver and staged decomposition: optimality, tree invariants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexsum.decompose import (
    DecompositionTree,
    PrototypeRatios,
    attempted_solve_budget,
    coverage_ratio,
    decompose_polytope,
    max_inscribed_box,
    representative_box_ratios,
)
from flexsum.errors import EmptyPolytopeError
from flexsum.geometry import AlignedBox, HPolytope, VPolygon, convex_hull_2d, union_area_2d

TRIANGLE = VPolygon([(0, 0), (1, 0), (0, 1)]).to_hpolytope()
UNIT_SQUARE = AlignedBox([0.0, 0.0], [1.0, 1.0]).to_hpolytope()
DIAMOND = VPolygon([(1, 0), (0, 1), (-1, 0), (0, -1)]).to_hpolytope()


def grid_oracle_max_box(poly: HPolytope, n=28):
    """Dense grid search over (lo, hi) pairs; independent of the solver."""
    if poly.dim != 2:
        raise NotImplementedError
    box = poly.bounding_box()
    axes = [np.linspace(box.lo[k], box.hi[k], n) for k in range(poly.dim)]
    Ap, Am = np.maximum(poly.A, 0), np.maximum(-poly.A, 0)
    i0, i1 = np.triu_indices(n)
    pairs = [np.stack([axes[k][i0], axes[k][i1]], axis=1) for k in range(2)]
    # all (lo_x, hi_x) x (lo_y, hi_y) combinations, vectorized feasibility
    px, py = pairs
    lo = np.stack(
        [np.repeat(px[:, 0], len(py)), np.tile(py[:, 0], len(px))], axis=1
    )
    hi = np.stack(
        [np.repeat(px[:, 1], len(py)), np.tile(py[:, 1], len(px))], axis=1
    )
    feas = ((hi @ Ap.T - lo @ Am.T) <= poly.b + 1e-9).all(axis=1)
    if not feas.any():
        return 0.0
    return float(np.prod((hi - lo)[feas], axis=1).max())


def random_polytope_2d(rng, n_max=8):
    while True:
        try:
            return convex_hull_2d(rng.normal(size=(n_max, 2)) * rng.uniform(0.5, 2)).to_hpolytope()
        except Exception:
            continue


# ------------------------------------------------------------------ ratios type


def test_prototype_ratios_validation():
    with pytest.raises(ValueError):
        PrototypeRatios(np.array([0.0]))
    r = PrototypeRatios(np.array([0.5, 2.0]))
    assert r.dim == 3
    assert np.allclose(r.widths_per_unit(), [1.0, 2.0, 0.5])


def test_ratios_from_box():
    r = PrototypeRatios.from_box(AlignedBox([0.0, 0.0], [1.0, 2.0]))
    assert np.allclose(r.r, [0.5])


# -------------------------------------------------------------------- max box


def test_max_box_square_is_square():
    box = max_inscribed_box(UNIT_SQUARE)
    assert box.volume == pytest.approx(1.0, rel=1e-6)


def test_max_box_triangle_matches_grid_oracle():
    box = max_inscribed_box(TRIANGLE)
    assert box.volume == pytest.approx(0.25, rel=1e-5)
    assert np.allclose(box.lo, [0, 0], atol=1e-6)
    assert np.allclose(box.hi, [0.5, 0.5], atol=1e-6)
    assert grid_oracle_max_box(TRIANGLE) <= box.volume * (1 + 1e-5)


def test_max_box_diamond_square_ratio():
    box = max_inscribed_box(DIAMOND, PrototypeRatios(np.array([1.0])))
    assert box.volume == pytest.approx(1.0, rel=1e-5)
    assert np.allclose(box.lo, [-0.5, -0.5], atol=1e-5)
    assert np.allclose(box.hi, [0.5, 0.5], atol=1e-5)


def test_max_box_degenerate_returns_point():
    seg = HPolytope.trusted(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]), np.array([1, 0, 0, 0]))
    box = max_inscribed_box(seg)
    assert box.volume == 0.0


def test_max_box_empty_raises():
    empty = HPolytope.trusted(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]), np.array([-1, 0, 1, 1]))
    with pytest.raises(EmptyPolytopeError):
        max_inscribed_box(empty)


@settings(deadline=None, max_examples=20)
@given(seed=st.integers(0, 2**32 - 1))
def test_max_box_beats_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    poly = random_polytope_2d(rng)
    box = max_inscribed_box(poly)
    assert grid_oracle_max_box(poly, n=20) <= box.volume * (1 + 1e-5) + 1e-12
    Ap, Am = np.maximum(poly.A, 0), np.maximum(-poly.A, 0)
    assert ((Ap @ box.hi - Am @ box.lo) <= poly.b + 1e-7).all()


@settings(deadline=None, max_examples=20)
@given(seed=st.integers(0, 2**32 - 1))
def test_max_box_ratio_fidelity(seed):
    rng = np.random.default_rng(seed)
    poly = random_polytope_2d(rng)
    r = float(rng.uniform(0.3, 3.0))
    box = max_inscribed_box(poly, PrototypeRatios(np.array([r])))
    w = box.widths
    assert w[0] / w[1] == pytest.approx(r, rel=1e-6)


# ------------------------------------------------------------- representative


def test_representative_first_and_largest():
    polys = [TRIANGLE, UNIT_SQUARE]
    r_first = representative_box_ratios(polys, "first")
    assert np.allclose(r_first.r, [1.0], atol=1e-5)  # triangle box is square
    r_largest = representative_box_ratios(polys, "largest-area")
    assert np.allclose(r_largest.r, [1.0], atol=1e-5)
    with pytest.raises(ValueError):
        representative_box_ratios(polys, "median")
    with pytest.raises(ValueError):
        representative_box_ratios([])


# --------------------------------------------------------------- decomposition


def test_square_decomposition_is_trivial():
    tree = decompose_polytope(UNIT_SQUARE, n_s=3)
    assert len(tree.nodes) == 1
    assert tree.nodes[0].box.volume == pytest.approx(1.0, rel=1e-6)
    assert all(s["reason"] in ("degenerate", "empty") for s in tree.skipped)
    assert coverage_ratio(tree, UNIT_SQUARE) == pytest.approx(1.0, rel=1e-6)


def test_triangle_single_stage_structure():
    tree = decompose_polytope(TRIANGLE, n_s=1)
    stage1 = tree.stage_nodes(1)
    assert len(stage1) == 2
    paths = {n.face_path for n in stage1}
    assert paths == {(2,), (4,)}  # beyond x = 0.5 and beyond y = 0.5
    for n in stage1:
        assert n.box.volume == pytest.approx(0.0625, rel=1e-4)
    skipped_paths = {tuple(s["face_path"]) for s in tree.skipped}
    assert skipped_paths == {(1,), (3,)}
    # coverage: (1/4 + 2/16) / (1/2)
    assert coverage_ratio(tree, TRIANGLE) == pytest.approx(0.75, rel=1e-4)


def test_tree_invariants_random_polytopes():
    rng = np.random.default_rng(17)
    for _ in range(8):
        poly = random_polytope_2d(rng)
        tree = decompose_polytope(poly, n_s=3)
        root = tree.nodes[0]
        assert root.stage == 0 and root.face_path == () and root.parent is None
        Ap, Am = np.maximum(poly.A, 0), np.maximum(-poly.A, 0)
        for node in tree.nodes:
            # containment in the device polytope
            assert ((Ap @ node.box.hi - Am @ node.box.lo) <= poly.b + 1e-7).all()
            if node.parent is not None:
                parent = tree.nodes[node.parent]
                assert node.stage == parent.stage + 1
                assert node.face_path[:-1] == parent.face_path
                assert 1 <= node.face_path[-1] <= 2 * poly.dim
                # volumes shrink down the tree
                assert node.box.volume <= parent.box.volume * (1 + 1e-9)


def test_progress_when_uncovered():
    # While coverage is incomplete, the next stage adds a positive-volume box.
    rng = np.random.default_rng(5)
    for _ in range(5):
        poly = random_polytope_2d(rng)
        tree = decompose_polytope(poly, n_s=5, vol_threshold=0.0)
        prev_cov = None
        for n_s in range(0, 6):
            cov = coverage_ratio(tree, poly, upto_stage=n_s)
            if n_s > 0 and prev_cov < 1 - 1e-6:
                assert any(n.box.volume > 0 for n in tree.stage_nodes(n_s)) or cov > prev_cov
            prev_cov = cov
        assert prev_cov > 0.9


def test_monotone_coverage_through_stage_4():
    # The full stage-8 convergence property runs in the acceptance suite.
    rng = np.random.default_rng(31)
    for _ in range(2):
        poly = random_polytope_2d(rng, n_max=6)
        tree = decompose_polytope(poly, n_s=4)
        covs = [coverage_ratio(tree, poly, upto_stage=s) for s in range(5)]
        assert all(b >= a - 1e-12 for a, b in zip(covs, covs[1:]))
        assert covs[-1] > covs[0]


def test_vol_threshold_prunes_expansion():
    deep = decompose_polytope(TRIANGLE, n_s=4, vol_threshold=0.0)
    shallow = decompose_polytope(TRIANGLE, n_s=4, vol_threshold=0.05)
    assert len(shallow.nodes) < len(deep.nodes)


def test_attempted_budget_counts():
    # no pruning, no degeneracy: budget equals sum over stages of (2M)^s
    for dim in range(2, 9):
        for stages in range(0, 4):
            expect = sum((2 * dim) ** s for s in range(stages + 1))
            assert attempted_solve_budget(dim, stages) == expect
    assert attempted_solve_budget(2, 3) == 85
    assert attempted_solve_budget(6, 3) == 1885


def test_attempted_solves_recorded_on_real_run():
    tree = decompose_polytope(TRIANGLE, n_s=1)
    # 1 root + 2 non-degenerate stage-1 regions
    assert tree.attempted_solves == 3


def test_coverage_montecarlo_matches_exact_2d():
    rng = np.random.default_rng(3)
    poly = random_polytope_2d(rng)
    tree = decompose_polytope(poly, n_s=2)
    exact = coverage_ratio(tree, poly, "exact2d")
    mc = coverage_ratio(tree, poly, "montecarlo", n_samples=300_000, seed=11)
    assert mc == pytest.approx(exact, abs=0.02)
