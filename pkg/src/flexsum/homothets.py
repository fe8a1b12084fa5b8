"""Homothets (scaled translates) and closed-form aggregation of inverter fleets.

A homothet ``beta * X0 + t`` of a shared prototype set turns Minkowski
summation into arithmetic: the sum of homothets of one prototype is the
homothet with summed scales and summed translations.  For inverter fleets with
shared normalized bounds this yields exact aggregate sets; for heterogeneous
fleets it yields a guaranteed inner bound built from the componentwise minima.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp
from .devices import InverterParams
from .errors import EmptyPolytopeError, LPNumericalError
from .geometry import AlignedBox, HPolytope, VPolygon
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class Homothet:
    """A scaled translate ``beta * prototype + shift`` of a shared prototype."""

    prototype_id: str
    beta: float
    shift: np.ndarray

    def __post_init__(self):
        shift = np.atleast_1d(np.asarray(self.shift, dtype=float)).copy()
        shift.setflags(write=False)
        if self.beta <= 0:
            raise ValueError("scale beta must be positive")
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "shift", shift)


def _prototype_vertices(prototype) -> np.ndarray:
    if isinstance(prototype, VPolygon):
        return np.asarray(prototype.vertices)
    if isinstance(prototype, AlignedBox):
        return prototype.corners()
    raise TypeError("prototype must be a VPolygon or an AlignedBox")


def fit_homothet(
    prototype,
    target: HPolytope,
    prototype_id: str = "prototype",
    tol: Tolerances = DEFAULT,
) -> Homothet:
    """Largest homothet of ``prototype`` inscribed in ``target``.

    Solves one LP over ``(beta, t)``: maximize beta subject to
    ``A (beta v_j + t) <= b`` for every prototype vertex ``v_j`` (containment
    of a polytope with those vertices reduces to containment of the vertices).
    The translation is free; only the scale is maximized.
    """
    V = _prototype_vertices(prototype)
    A, b = target.A, target.b
    dim = target.dim
    if V.shape[1] != dim:
        raise ValueError("prototype and target dimensions differ")
    m, n_v = A.shape[0], V.shape[0]
    # variables z = (beta, t); rows: (A v_j) beta + A t <= b for each j
    rows = np.zeros((m * n_v + 1, 1 + dim))
    rhs = np.zeros(m * n_v + 1)
    for j in range(n_v):
        rows[j * m : (j + 1) * m, 0] = A @ V[j]
        rows[j * m : (j + 1) * m, 1:] = A
        rhs[j * m : (j + 1) * m] = b
    rows[-1, 0] = -1.0  # beta >= 0
    c = np.zeros(1 + dim)
    c[0] = 1.0
    sol = lp.solve(c, rows, rhs, tol)
    if sol.status == lp.INFEASIBLE:
        raise EmptyPolytopeError("target polytope is empty")
    if sol.status != lp.OPTIMAL:
        raise LPNumericalError(f"homothet fit ended with LP status {sol.status}")
    beta = float(sol.x[0])
    if beta <= 0:
        raise EmptyPolytopeError("no positive-scale homothet fits the target")
    return Homothet(prototype_id, beta, sol.x[1:])


def homothet_msum(parts: list[Homothet]) -> Homothet:
    """Minkowski sum of homothets of one prototype: sum scales, sum shifts."""
    if not parts:
        raise ValueError("need at least one homothet")
    first = parts[0].prototype_id
    if any(h.prototype_id != first for h in parts):
        raise ValueError("homothets reference different prototypes")
    beta = sum(h.beta for h in parts)
    shift = np.sum([h.shift for h in parts], axis=0)
    return Homothet(first, beta, shift)


def realize_polygon(h: Homothet, prototype: VPolygon) -> VPolygon:
    """Concrete polygon of ``beta * prototype + shift``."""
    return VPolygon(h.beta * np.asarray(prototype.vertices) + h.shift)


def realize_box(h: Homothet, prototype: AlignedBox) -> AlignedBox:
    return AlignedBox(h.beta * prototype.lo + h.shift, h.beta * prototype.hi + h.shift)


def _require_close(values, what: str, tol: float = 1e-12):
    values = list(values)
    if max(values) - min(values) > tol:
        raise ValueError(f"devices disagree on {what}; use the decomposition pipeline instead")
    return values[0]


def aggregate_common_bounds(devices: list[InverterParams]) -> InverterParams:
    """Exact aggregate of storage inverters sharing normalized power bounds.

    Each device set is a homothet (scale ``S_i``) of the common unit shape, so
    the fleet sum is the same shape with rating ``sum(S_i)``.
    """
    if not devices:
        raise ValueError("empty device list")
    if any(d.is_pv for d in devices):
        raise ValueError("expected storage-form devices (no theta)")
    p_min = _require_close([d.p_min for d in devices], "p_min")
    p_max = _require_close([d.p_max for d in devices], "p_max")
    sides = int(_require_close([d.sides for d in devices], "sides"))
    return InverterParams(S=sum(d.S for d in devices), p_min=p_min, p_max=p_max, sides=sides)


def aggregate_common_pv(devices: list[InverterParams]) -> InverterParams:
    """Exact aggregate of PV inverters sharing the normalized bound and angle."""
    if not devices:
        raise ValueError("empty device list")
    if not all(d.is_pv for d in devices):
        raise ValueError("expected power-factor-form devices")
    p_max = _require_close([d.p_max for d in devices], "p_max")
    theta = _require_close([d.theta for d in devices], "theta")
    sides = int(_require_close([d.sides for d in devices], "sides"))
    return InverterParams(S=sum(d.S for d in devices), p_min=0.0, p_max=p_max, theta=theta, sides=sides)


def aggregate_lower_bound_pv(devices: list[InverterParams]) -> InverterParams:
    """Guaranteed inner bound for heterogeneous PV fleets.

    Uses the intersection shape: ratings, bounds and angles are replaced by
    their fleet minima and the shape is scaled by the fleet size.  The result
    is contained in the true aggregate set, with equality exactly when the
    fleet is homogeneous.
    """
    if not devices:
        raise ValueError("empty device list")
    if not all(d.is_pv for d in devices):
        raise ValueError("expected power-factor-form devices")
    sides = int(_require_close([d.sides for d in devices], "sides"))
    n = len(devices)
    return InverterParams(
        S=n * min(d.S for d in devices),
        p_min=0.0,
        p_max=min(d.p_max for d in devices),
        theta=min(d.theta for d in devices),
        sides=sides,
    )
