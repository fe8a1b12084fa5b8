"""Dense two-phase simplex solver for small linear programs.

Problems here are tiny (tens of rows, at most a few hundred), so the solver
favours robustness over speed: full-tableau updates, Dantzig pricing with an
automatic switch to Bland's rule when the objective stalls (anti-cycling),
and explicit infeasible/unbounded reporting.  Variables are free; the solver
performs the ``x = u - v`` split internally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LPNumericalError
from .tolerances import DEFAULT, Tolerances

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_MAX_PIVOTS = 20_000
_STALL_LIMIT = 30


@dataclass(frozen=True)
class LPProblem:
    """Maximize ``c @ x`` subject to ``A @ x <= b`` with free ``x``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float)
        if A.shape != (b.size, c.size):
            raise ValueError(f"inconsistent LP shapes: A {A.shape}, b {b.shape}, c {c.shape}")
        if not (np.isfinite(c).all() and np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class LPSolution:
    status: str
    x: np.ndarray | None = None
    value: float | None = None


def _run_simplex(T, basis, cost, tol: Tolerances, forbidden=()):
    """Iterate the tableau ``T`` (rows m, last column = rhs) to optimality.

    Returns the terminal status string.  ``basis`` is updated in place.
    ``forbidden`` columns are never allowed to enter the basis.
    """
    m, w = T.shape
    n = w - 1
    allowed = np.ones(n, dtype=bool)
    allowed[list(forbidden)] = False
    stall = 0
    last_obj = -np.inf
    for _ in range(_MAX_PIVOTS):
        reduced = cost - cost[basis] @ T[:, :n]
        reduced[basis] = 0.0
        reduced[~allowed] = -np.inf
        use_bland = stall >= _STALL_LIMIT
        if use_bland:
            improving = np.flatnonzero(reduced > tol.lp_value)
            if improving.size == 0:
                return OPTIMAL
            j = int(improving[0])
        else:
            j = int(np.argmax(reduced))
            if reduced[j] <= tol.lp_value:
                return OPTIMAL
        col = T[:, j]
        positive = col > tol.lp_pivot
        if not positive.any():
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[positive] = T[positive, n] / col[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12)
        if use_bland:
            # Bland: among min-ratio rows, evict the lowest basis index.
            i = int(ties[np.argmin(basis[ties])])
        else:
            i = int(ties[np.argmax(col[ties])])
        pivot = T[i, j]
        T[i] /= pivot
        column = T[:, j].copy()
        column[i] = 0.0
        T -= np.outer(column, T[i])
        T[:, j] = 0.0
        T[i, j] = 1.0
        basis[i] = j
        obj = cost[basis] @ T[:, n]
        if obj <= last_obj + 1e-12:
            stall += 1
        else:
            stall = 0
            last_obj = obj
    raise LPNumericalError("simplex pivot limit exceeded")


def lp_solve(problem: LPProblem, tol: Tolerances = DEFAULT) -> LPSolution:
    """Solve ``max c @ x  s.t.  A x <= b`` and report status faithfully.

    Statuses: ``optimal`` (with a feasible maximizer), ``infeasible``, or
    ``unbounded``.  Raises :class:`LPNumericalError` rather than returning a
    wrong status when the tableau degenerates beyond the pivot cap.
    """
    c, A, b = problem.c, problem.A, problem.b
    m, n = A.shape

    # Free variables: x = u - v with u, v >= 0.
    A2 = np.hstack([A, -A])
    c2 = np.concatenate([c, -c])

    flip = b < 0
    A2[flip] *= -1.0
    rhs = np.where(flip, -b, b)
    slack = np.where(flip, -1.0, 1.0)

    art_rows = np.flatnonzero(flip)
    n_struct = 2 * n
    n_slack = m
    n_art = art_rows.size
    width = n_struct + n_slack + n_art

    T = np.zeros((m, width + 1))
    T[:, :n_struct] = A2
    T[np.arange(m), n_struct + np.arange(m)] = slack
    for k, r in enumerate(art_rows):
        T[r, n_struct + n_slack + k] = 1.0
    T[:, width] = rhs

    basis = np.empty(m, dtype=int)
    basis[:] = n_struct + np.arange(m)
    basis[art_rows] = n_struct + n_slack + np.arange(n_art)

    scale = max(1.0, float(np.abs(b).max(initial=0.0)))

    if n_art:
        phase1 = np.zeros(width)
        phase1[n_struct + n_slack :] = -1.0
        status = _run_simplex(T, basis, phase1, tol)
        if status != OPTIMAL:
            raise LPNumericalError("phase-1 simplex did not terminate at an optimum")
        residual = -(phase1[basis] @ T[:, width])
        if residual > tol.feasibility * scale:
            return LPSolution(INFEASIBLE)
        # Drive any artificial still basic (at zero level) out of the basis.
        for i in range(m):
            if basis[i] >= n_struct + n_slack:
                row = T[i, : n_struct + n_slack]
                candidates = np.flatnonzero(np.abs(row) > tol.lp_pivot)
                if candidates.size:
                    j = int(candidates[0])
                    pivot = T[i, j]
                    T[i] /= pivot
                    column = T[:, j].copy()
                    column[i] = 0.0
                    T -= np.outer(column, T[i])
                    T[:, j] = 0.0
                    T[i, j] = 1.0
                    basis[i] = j
                # Otherwise the row is redundant; the artificial stays at zero.

    phase2 = np.zeros(width)
    phase2[:n_struct] = c2
    forbidden = range(n_struct + n_slack, width)
    status = _run_simplex(T, basis, phase2, tol, forbidden=forbidden)
    if status == UNBOUNDED:
        return LPSolution(UNBOUNDED)

    full = np.zeros(width)
    full[basis] = T[:, width]
    x = full[:n] - full[n : 2 * n]
    value = float(c @ x)
    worst = float((A @ x - b).max(initial=0.0))
    if worst > 1e-6 * scale + 1e-9:
        raise LPNumericalError(f"simplex returned an infeasible point (violation {worst:.2e})")
    return LPSolution(OPTIMAL, x=x, value=value)


def solve(c, A, b, tol: Tolerances = DEFAULT) -> LPSolution:
    """Convenience wrapper around :func:`lp_solve`."""
    return lp_solve(LPProblem(np.asarray(c, float), np.asarray(A, float), np.asarray(b, float)), tol)


def feasible_point(A, b, tol: Tolerances = DEFAULT) -> np.ndarray | None:
    """Return some point with ``A x <= b``, or None when the system is infeasible."""
    sol = solve(np.zeros(A.shape[1]), A, b, tol)
    return sol.x if sol.status == OPTIMAL else None


def chebyshev_ball(A, b, tol: Tolerances = DEFAULT):
    """Largest inscribed ball of ``{x : A x <= b}``.

    Returns ``(center, radius)``.  A negative radius certifies emptiness;
    raises :class:`~flexsum.errors.UnboundedPolytopeError` when the radius is
    unbounded (the set contains arbitrarily large balls).
    """
    from .errors import UnboundedPolytopeError

    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    norms = np.linalg.norm(A, axis=1)
    if (norms == 0).any():
        raise ValueError("zero row in constraint matrix")
    m, n = A.shape
    Ar = np.hstack([A, norms[:, None]])
    c = np.zeros(n + 1)
    c[-1] = 1.0
    sol = solve(c, Ar, b, tol)
    if sol.status == UNBOUNDED:
        raise UnboundedPolytopeError("Chebyshev radius is unbounded")
    if sol.status != OPTIMAL:
        raise LPNumericalError(f"Chebyshev LP ended with status {sol.status}")
    return sol.x[:n], float(sol.x[n])
