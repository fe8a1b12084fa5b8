"""Simplex solver: statuses, optimality certificates, anti-cycling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flexsum.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, chebyshev_ball, lp_solve, LPProblem, solve


def test_box_maximum():
    # max x1 s.t. 0 <= x1 <= 1
    sol = solve([1.0], [[1.0], [-1.0]], [1.0, 0.0])
    assert sol.status == OPTIMAL
    assert sol.value == pytest.approx(1.0, abs=1e-9)
    assert sol.x[0] == pytest.approx(1.0, abs=1e-9)


def test_simplex_facet():
    # max x1 + x2 s.t. x >= 0, x1 + x2 <= 1
    sol = solve([1.0, 1.0], [[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    assert sol.status == OPTIMAL
    assert sol.value == pytest.approx(1.0, abs=1e-9)


def test_unbounded():
    # max x1 s.t. x1 >= 0
    sol = solve([1.0], [[-1.0]], [0.0])
    assert sol.status == UNBOUNDED


def test_infeasible():
    sol = solve([1.0], [[1.0], [-1.0]], [-2.0, 1.0])
    assert sol.status == INFEASIBLE


def test_negative_rhs_feasible():
    # x1 >= 2 (written as -x1 <= -2), x1 <= 5
    sol = solve([-1.0], [[-1.0], [1.0]], [-2.0, 5.0])
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(2.0, abs=1e-8)


def test_free_variables_negative_optimum():
    # max -x over x >= -3: optimum at x = -3
    sol = solve([-1.0], [[-1.0]], [3.0])
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(-3.0, abs=1e-8)


def test_degenerate_does_not_cycle():
    # Beale's classic cycling example (minimization form flipped to max).
    c = -np.array([-0.75, 150.0, -0.02, 6.0])
    A = np.array(
        [
            [0.25, -60.0, -1.0 / 25.0, 9.0],
            [0.5, -90.0, -1.0 / 50.0, 3.0],
            [0.0, 0.0, 1.0, 0.0],
            [-1, 0, 0, 0],
            [0, -1, 0, 0],
            [0, 0, -1, 0],
            [0, 0, 0, -1],
        ]
    )
    b = np.array([0.0, 0.0, 1.0, 0, 0, 0, 0])
    sol = lp_solve(LPProblem(c, A, b))
    assert sol.status == OPTIMAL
    assert sol.value == pytest.approx(0.05, abs=1e-8)


def test_shape_validation():
    with pytest.raises(ValueError):
        LPProblem(np.ones(2), np.ones((3, 3)), np.ones(3))
    with pytest.raises(ValueError):
        LPProblem(np.array([np.inf]), np.ones((1, 1)), np.ones(1))


@settings(deadline=None, max_examples=40)
@given(seed=st.integers(0, 2**32 - 1))
def test_optimal_value_dominates_random_feasible_points(seed):
    # Certificate: the maximizer beats 100 random feasible points of a random
    # bounded polytope built around the origin.
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    m = int(rng.integers(n + 1, 12))
    A = rng.normal(size=(m, n))
    A = np.vstack([A, np.eye(n), -np.eye(n)])  # keep it bounded
    b = rng.uniform(0.5, 2.0, size=A.shape[0])  # origin strictly inside
    c = rng.normal(size=n)
    sol = solve(c, A, b)
    assert sol.status == OPTIMAL
    assert ((A @ sol.x - b) <= 1e-7).all()
    center, radius = chebyshev_ball(A, b)
    assert radius > 0
    for _ in range(100):
        d = rng.normal(size=n)
        d /= np.linalg.norm(d)
        p = center + radius * rng.uniform(0, 1) * d
        assert ((A @ p - b) <= 1e-9).all()
        assert c @ p <= sol.value + 1e-7 * (1 + abs(sol.value))


def test_chebyshev_ball_empty_reports_negative_radius():
    _, r = chebyshev_ball(np.array([[1.0], [-1.0]]), np.array([-2.0, 1.0]))
    assert r < 0
