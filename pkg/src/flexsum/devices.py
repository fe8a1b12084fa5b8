"""Flexibility polytopes of distributed energy resources.

Three device families are modelled:

* inverter-interfaced devices (PV or storage) in the real/reactive power
  plane, with the apparent-power disc linearized as an inscribed N-gon;
* controllable loads as real-power intervals;
* storage-like loads over a planning horizon, where a state-of-charge
  recursion ``e_{k+1} = a e_k + g P_k`` couples the per-period powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, EmptyPolytopeError, InfeasibleModelError
from .geometry import AlignedBox, HalfSpace, HPolytope, vertex_enum_2d
from .tolerances import DEFAULT, Tolerances

#: Discretization used throughout the studies; 24 sides keep 98.9% of the disc.
DEFAULT_SIDES = 24


@dataclass(frozen=True)
class InverterParams:
    """Inverter operating-region parameters.

    ``S`` is the apparent power rating; ``p_min``/``p_max`` are real-power
    bounds normalized by ``S``; ``theta`` (radians), when present, is the
    minimum-power-factor angle and selects the PV (two-quadrant) form, which
    requires ``p_min = 0`` to stay convex.  ``sides`` is the number of edges
    of the polygon inscribed in the apparent-power circle (even, >= 4).
    """

    S: float
    p_min: float = -1.0
    p_max: float = 1.0
    theta: float | None = None
    sides: int = DEFAULT_SIDES

    def __post_init__(self):
        if self.S <= 0:
            raise ValueError("rating S must be positive")
        if not -1.0 <= self.p_min <= self.p_max <= 1.0:
            raise ValueError("need -1 <= p_min <= p_max <= 1")
        if self.sides % 2 or self.sides < 4:
            raise ValueError("sides must be even and >= 4")
        if self.theta is not None:
            if not 0.0 <= self.theta <= math.pi / 2:
                raise ValueError("theta must lie in [0, pi/2]")
            if self.p_min != 0.0:
                raise ValueError("power-factor form requires p_min = 0")

    @property
    def is_pv(self) -> bool:
        return self.theta is not None


@dataclass(frozen=True)
class BatteryParams:
    """Storage-like load over ``horizon`` periods.

    ``a`` is the per-period energy dissipation, ``gamma`` the charging
    efficiency mapping power to normalized state of charge, ``e0`` the initial
    state of charge.  ``gamma = 0`` disables the state coupling entirely.
    """

    p_min: float
    p_max: float
    a: float = 1.0
    gamma: float = 1.0
    e0: float = 0.5
    horizon: int = 1

    def __post_init__(self):
        if self.p_min > self.p_max:
            raise ValueError("p_min must not exceed p_max")
        if not 0.0 < self.a <= 1.0:
            raise ValueError("dissipation a must lie in (0, 1]")
        if self.gamma < 0.0:
            raise ValueError("efficiency gamma must be >= 0")
        if not 0.0 <= self.e0 <= 1.0:
            raise ValueError("initial state of charge must lie in [0, 1]")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


def inverter_vertices(S: float, sides: int = DEFAULT_SIDES) -> np.ndarray:
    """Vertices of the N-gon inscribed in the circle of radius ``S``.

    Vertex j sits at angle ``(j - 1) * 2 pi / N`` for j = 1..N, so the first
    vertex is ``(S, 0)`` and the orientation is counter-clockwise.
    """
    if sides % 2 or sides < 4:
        raise ValueError("sides must be even and >= 4")
    angles = np.arange(sides) * (2.0 * math.pi / sides)
    return np.stack([S * np.cos(angles), S * np.sin(angles)], axis=1)


def circle_halfspaces(S: float, sides: int = DEFAULT_SIDES) -> list[HalfSpace]:
    """Half-spaces of the inscribed N-gon, one per edge.

    Edges in the upper half-plane (j <= N/2) are emitted in slope form
    ``-m_j P + Q <= Q_j - m_j P_j``; lower edges carry the negated form.
    A vertical edge (equal consecutive P, impossible for even N but guarded
    anyway) degenerates to the exact axis-aligned bound on P.
    """
    verts = inverter_vertices(S, sides)
    nxt = np.roll(verts, -1, axis=0)
    out: list[HalfSpace] = []
    for j in range(sides):
        (p0, q0), (p1, q1) = verts[j], nxt[j]
        dp, dq = p1 - p0, q1 - q0
        if abs(dp) < 1e-14 * S:
            sign = 1.0 if p0 > 0 else -1.0
            out.append(HalfSpace(np.array([sign, 0.0]), sign * p0))
            continue
        slope = dq / dp
        if j < sides // 2:
            out.append(HalfSpace(np.array([-slope, 1.0]), q0 - slope * p0))
        else:
            out.append(HalfSpace(np.array([slope, -1.0]), slope * p0 - q0))
    return out


def _stack(halfspaces: list[HalfSpace]):
    A = np.stack([h.normal for h in halfspaces])
    b = np.array([h.offset for h in halfspaces])
    return A, b


def storage_inverter_polytope(p: InverterParams, tol: Tolerances = DEFAULT) -> HPolytope:
    """Polytope for a storage inverter: inscribed N-gon cut by the P bounds.

    Degenerate parameter choices (``p_min == p_max``) yield a valid segment;
    inspect ``is_degenerate`` on the result.  Inconsistent bounds raise
    :class:`InfeasibleModelError`.
    """
    if p.is_pv:
        raise ValueError("got power-factor parameters; use pv_inverter_polytope")
    rows = circle_halfspaces(p.S, p.sides)
    rows.append(HalfSpace(np.array([1.0, 0.0]), p.S * p.p_max))
    rows.append(HalfSpace(np.array([-1.0, 0.0]), -p.S * p.p_min))
    return _build_device_polytope(*_stack(rows), tol)


def pv_inverter_polytope(p: InverterParams, tol: Tolerances = DEFAULT) -> HPolytope:
    """Polytope for a PV inverter: P bounds, power-factor wedge, right arc.

    Only the edges of the inscribed N-gon facing the ``P > 0`` half-plane are
    kept (the others are redundant since ``P >= 0``).  ``theta = pi/2`` makes
    the wedge inactive and is implemented by omitting the wedge rows;
    ``theta = 0`` produces the degenerate segment ``Q = 0``.
    """
    if not p.is_pv:
        raise ValueError("missing theta; use storage_inverter_polytope")
    rows = [
        HalfSpace(np.array([-1.0, 0.0]), 0.0),
        HalfSpace(np.array([1.0, 0.0]), p.S * p.p_max),
    ]
    if p.theta < math.pi / 2:
        t = math.tan(p.theta)
        rows.append(HalfSpace(np.array([-t, 1.0]), 0.0))
        rows.append(HalfSpace(np.array([-t, -1.0]), 0.0))
    alpha = 2.0 * math.pi / p.sides
    for j, hs in enumerate(circle_halfspaces(p.S, p.sides), start=1):
        mid = (j - 0.5) * alpha
        if math.cos(mid) > -1e-12:  # edge faces the P > 0 half-plane
            rows.append(hs)
    return _build_device_polytope(*_stack(rows), tol)


def _build_device_polytope(A, b, tol: Tolerances) -> HPolytope:
    try:
        return HPolytope(A, b, tol)
    except EmptyPolytopeError as exc:
        raise InfeasibleModelError("device parameters describe an empty set") from exc


def inverter_polytope(p: InverterParams, tol: Tolerances = DEFAULT) -> HPolytope:
    """Dispatch to the PV or storage form based on the presence of theta."""
    return pv_inverter_polytope(p, tol) if p.is_pv else storage_inverter_polytope(p, tol)


def exact_region_area(p: InverterParams) -> float:
    """Closed-form area of the continuous (non-discretized) operating region.

    Storage form: slab cut of the disc,
        ``A = S^2 (F(p_max) - F(p_min))`` with ``F(t) = t sqrt(1-t^2) + asin t``
    (antiderivative of the chord length ``2 sqrt(1-t^2)``).

    PV form with wedge angle ``theta`` and cut ``P <= S p_max``:
    let ``phi0 = acos(p_max)``; when ``theta <= phi0`` the wedge never reaches
    the arc and the region is the triangle ``A = S^2 p_max^2 tan(theta)``;
    otherwise ``A = S^2 (p_max sqrt(1 - p_max^2) + theta - phi0)``.
    """
    S2 = p.S * p.S
    if not p.is_pv:
        def F(t):
            return t * math.sqrt(max(0.0, 1.0 - t * t)) + math.asin(max(-1.0, min(1.0, t)))

        return S2 * (F(p.p_max) - F(p.p_min))
    phi0 = math.acos(p.p_max)
    if p.theta <= phi0:
        return S2 * p.p_max * p.p_max * math.tan(p.theta)
    return S2 * (p.p_max * math.sqrt(1.0 - p.p_max * p.p_max) + p.theta - phi0)


def area_ratio(p: InverterParams, tol: Tolerances = DEFAULT) -> float:
    """Polygon area of the built polytope divided by the exact region area."""
    exact = exact_region_area(p)
    if exact <= 0.0:
        raise DegenerateGeometryError("continuous region has zero area")
    polygon = vertex_enum_2d(inverter_polytope(p, tol), tol)
    return polygon.area / exact


def load_interval(p_min: float, p_max: float) -> AlignedBox:
    """Feasible set of a controllable load, a 1D interval (points allowed)."""
    if p_min > p_max:
        raise ValueError("p_min must not exceed p_max")
    return AlignedBox(np.array([p_min]), np.array([p_max]))


def battery_polytope(p: BatteryParams, tol: Tolerances = DEFAULT) -> HPolytope:
    """Multi-period feasible set of a storage-like load in R^horizon.

    Rows: per-period power bounds plus, for every period k, the pair of
    state-of-charge bounds ``0 <= a^k e0 + sum_{t<=k} a^(k-t) gamma P_t <= 1``.
    With ``gamma = 0`` the coupling rows are vacuous and dropped (after
    checking they are satisfiable at all).
    """
    M = p.horizon
    eye = np.eye(M)
    rows = [eye, -eye]
    rhs = [np.full(M, p.p_max), np.full(M, -p.p_min)]
    if p.gamma > 0.0:
        coeff = np.zeros((M, M))
        for k in range(1, M + 1):
            coeff[k - 1, :k] = p.a ** (k - np.arange(1, k + 1)) * p.gamma
        soc0 = p.a ** np.arange(1, M + 1) * p.e0
        rows += [coeff, -coeff]
        rhs += [1.0 - soc0, soc0]
    else:
        soc0 = p.a ** np.arange(1, M + 1) * p.e0
        if (soc0 < -tol.feasibility).any() or (soc0 > 1.0 + tol.feasibility).any():
            raise InfeasibleModelError("state of charge drifts outside [0, 1]")
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    try:
        return HPolytope(A, b, tol)
    except EmptyPolytopeError as exc:
        raise InfeasibleModelError("battery parameters are infeasible") from exc
