"""Staged decomposition of a polytope into inscribed axis-aligned boxes.

Stage 0 inscribes the maximum-volume box (optionally constrained to fixed
edge ratios so every box is a homothet of one prototype box).  Each later
stage revisits every region lying beyond one face of a parent box (the face
inequality reversed, accumulated along the path from the root) and inscribes
a box there, producing a tree whose box union fills the polytope.

The box subproblem ``max prod(x+ - x-)  s.t.  A+ x+ - A- x- <= b`` is solved
as a log-barrier Newton path-following scheme on the concave log-volume
objective.  A plain per-coordinate ascent is not used because it can stall at
non-optimal corners (e.g. at 0.207 instead of 0.25 on the unit triangle); the
ratio-constrained variant shares the same engine with a linear objective,
which also lands on the analytic center of the optimal face instead of an
arbitrary vertex, keeping later stages well conditioned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateGeometryError,
    EmptyPolytopeError,
    LPNumericalError,
)
from .geometry import AlignedBox, HPolytope, union_area_2d, union_volume_boxes, vertex_enum_2d
from .geometry import mc_volume as _mc_volume
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class PrototypeRatios:
    """Edge-length ratios ``d1 / dk`` (k = 2..M) of a prototype box."""

    r: np.ndarray

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float)).copy()
        if (r <= 0).any() or not np.isfinite(r).all():
            raise ValueError("ratios must be positive and finite")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def dim(self) -> int:
        return self.r.size + 1

    def widths_per_unit(self) -> np.ndarray:
        """Edge lengths for d1 = 1, i.e. ``w = (1, 1/r_2, ..., 1/r_M)``."""
        return np.concatenate([[1.0], 1.0 / self.r])

    @classmethod
    def from_box(cls, box: AlignedBox) -> "PrototypeRatios":
        w = box.widths
        if (w <= 0).any():
            raise DegenerateGeometryError("prototype box has a zero edge")
        return cls(w[0] / w[1:]) if w.size > 1 else cls(np.empty(0))


@dataclass(frozen=True)
class TreeNode:
    stage: int
    face_path: tuple[int, ...]
    box: AlignedBox
    parent: int | None


@dataclass
class DecompositionTree:
    """Record of one staged decomposition run."""

    device_id: str
    dim: int
    nodes: list[TreeNode]
    settings: dict
    skipped: list[dict] = field(default_factory=list)
    attempted_solves: int = 0

    def boxes(self, upto_stage: int | None = None) -> list[AlignedBox]:
        if upto_stage is None:
            return [n.box for n in self.nodes]
        return [n.box for n in self.nodes if n.stage <= upto_stage]

    def stage_nodes(self, stage: int) -> list[TreeNode]:
        return [n for n in self.nodes if n.stage == stage]

    def node_by_path(self, face_path: tuple[int, ...]) -> TreeNode | None:
        for n in self.nodes:
            if n.face_path == face_path:
                return n
        return None


# ------------------------------------------------------------------ box solver


def _barrier_maximize(c_lin, P, G, h, z0, *, t_final=3e7, mu=25.0, newton_cap=120):
    """Maximize ``c_lin @ z + sum(log(P @ z))`` over ``G @ z < h``.

    Log-barrier path following with damped Newton steps.  ``P`` may be empty
    (pure linear objective).  ``z0`` must be strictly feasible for both the
    barrier rows and the log domain.  Intermediate centering is loose; only
    the final barrier stage is solved to high accuracy.
    """
    z = np.asarray(z0, dtype=float).copy()
    n = z.size
    has_logs = P.shape[0] > 0
    t = 1.0
    while True:
        dec_tol = 2e-10 if t >= t_final else 1e-5
        for _ in range(newton_cap):
            s = h - G @ z
            u = P @ z if has_logs else None
            grad = t * c_lin + G.T @ (1.0 / s)
            if has_logs:
                grad = grad + t * (P.T @ (1.0 / u))
            H = (G / (s * s)[:, None]).T @ G
            if has_logs:
                H = H + t * (P / (u * u)[:, None]).T @ P
            try:
                step = np.linalg.solve(H, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H + 1e-12 * np.eye(n), grad, rcond=None)[0]
            decrement = float(grad @ step)
            if decrement <= dec_tol:
                break
            # Longest step keeping all slacks/logs strictly positive.
            alpha = 1.0
            ds = G @ step
            shrink = ds > 0
            if shrink.any():
                alpha = min(alpha, 0.99 * float((s[shrink] / ds[shrink]).min()))
            if has_logs:
                du = P @ step
                closing = du < 0
                if closing.any():
                    alpha = min(alpha, 0.99 * float((u[closing] / -du[closing]).min()))

            def value(zz):
                ss = h - G @ zz
                if (ss <= 0).any():
                    return -np.inf
                val = t * float(c_lin @ zz) + float(np.log(ss).sum())
                if has_logs:
                    uu = P @ zz
                    if (uu <= 0).any():
                        return -np.inf
                    val += t * float(np.log(uu).sum())
                return val

            base = value(z)
            while alpha > 1e-14:
                trial = z + alpha * step
                if value(trial) > base + 1e-12 * abs(base):
                    z = trial
                    break
                alpha *= 0.5
            else:
                break
        if t >= t_final:
            return z
        t = min(t * mu, t_final)


def max_inscribed_box(
    poly: HPolytope,
    ratios: PrototypeRatios | None = None,
    tol: Tolerances = DEFAULT,
) -> AlignedBox:
    """Maximum-volume axis-aligned box inscribed in ``poly``.

    With ``ratios`` the box is constrained to be a homothet of the prototype
    (edge lengths proportional to the prototype's), which reduces the problem
    to maximizing a single edge length.  Without ratios the concave
    log-volume objective is maximized directly.  Degenerate polytopes yield
    the point box at the Chebyshev center.
    """
    center, radius = poly.chebyshev()
    if radius < 0:
        raise EmptyPolytopeError("cannot inscribe a box in an empty polytope")
    M = poly.dim
    if radius < tol.degeneracy:
        return AlignedBox(center, center)
    norms = np.linalg.norm(poly.A, axis=1)
    A = poly.A / norms[:, None]
    b = poly.b / norms
    Ap = np.maximum(A, 0.0)
    Am = np.maximum(-A, 0.0)

    if ratios is not None:
        if ratios.dim != M:
            raise ValueError(f"ratios are for dimension {ratios.dim}, polytope has {M}")
        w = ratios.widths_per_unit()
        # variables z = (x-, d1); box is x- .. x- + d1 * w
        G = np.zeros((A.shape[0] + 1, M + 1))
        G[:-1, :M] = A
        G[:-1, M] = Ap @ w
        G[-1, M] = -1.0  # d1 >= 0
        h = np.concatenate([b, [0.0]])
        d0 = radius / (np.sqrt(M) * float(w.max()))
        z0 = np.concatenate([center - 0.5 * d0 * w, [d0]])
        c = np.zeros(M + 1)
        c[M] = 1.0
        z = _barrier_maximize(c, np.empty((0, M + 1)), G, h, z0)
        lo = z[:M]
        return AlignedBox(lo, lo + z[M] * w)

    # variables z = (x-, x+)
    G = np.hstack([-Am, Ap])
    h = b.copy()
    P = np.hstack([-np.eye(M), np.eye(M)])
    delta = radius / (2.0 * np.sqrt(M))
    z0 = np.concatenate([center - delta, center + delta])
    z = _barrier_maximize(np.zeros(2 * M), P, G, h, z0)
    lo, hi = z[:M], z[M:]
    viol = float((Ap @ hi - Am @ lo - b).max())
    if viol > tol.feasibility:
        raise LPNumericalError(f"box solver violated containment by {viol:.2e}")
    return AlignedBox(lo, hi)


def representative_box_ratios(
    polys: list[HPolytope],
    selector: str = "largest-area",
    tol: Tolerances = DEFAULT,
) -> PrototypeRatios:
    """Prototype edge ratios from the max box of a representative polytope.

    ``selector = "first"`` takes the first polytope; ``"largest-area"``
    (2D only) takes the one with the largest exact polygon area.
    """
    if not polys:
        raise ValueError("empty polytope list")
    if selector == "first":
        chosen = polys[0]
    elif selector == "largest-area":
        if any(p.dim != 2 for p in polys):
            raise ValueError("largest-area selection needs 2D polytopes")
        areas = [vertex_enum_2d(p, tol).area for p in polys]
        chosen = polys[int(np.argmax(areas))]
    else:
        raise ValueError(f"unknown selector {selector!r}")
    box = max_inscribed_box(chosen, None, tol)
    if box.volume <= 0:
        raise DegenerateGeometryError("representative polytope is degenerate")
    return PrototypeRatios.from_box(box)


# --------------------------------------------------------------- decomposition


def decompose_polytope(
    poly: HPolytope,
    ratios: PrototypeRatios | None = None,
    n_s: int = 1,
    vol_threshold: float | None = None,
    device_id: str = "device",
    tol: Tolerances = DEFAULT,
) -> DecompositionTree:
    """Run the staged box decomposition up to ``n_s`` stages.

    A child region is its parent's region intersected with one reversed face
    of the parent's box, so the region constraints accumulate along the face
    path.  Degenerate or empty regions are skipped and recorded.  Children of
    a box smaller than ``vol_threshold`` (default: 1e-6 of the root box
    volume) are not explored.
    """
    if n_s < 0:
        raise ValueError("stage count must be >= 0")
    root_box = max_inscribed_box(poly, ratios, tol)
    tree = DecompositionTree(
        device_id=device_id,
        dim=poly.dim,
        nodes=[TreeNode(0, (), root_box, None)],
        settings={
            "n_s": n_s,
            "vol_threshold": vol_threshold,
            "ratios": None if ratios is None else [float(v) for v in ratios.r],
        },
        attempted_solves=1,
    )
    if vol_threshold is None:
        vol_threshold = 1e-6 * root_box.volume
    if root_box.volume <= 0:
        return tree

    frontier: list[tuple[int, np.ndarray, np.ndarray]] = [(0, poly.A, poly.b)]
    for stage in range(1, n_s + 1):
        next_frontier = []
        for node_idx, A, b in frontier:
            parent = tree.nodes[node_idx]
            for sigma in range(1, 2 * poly.dim + 1):
                face = parent.box.reversed_face(sigma)
                A_child = np.vstack([A, face.normal])
                b_child = np.concatenate([b, [face.offset]])
                region = HPolytope.trusted(A_child, b_child)
                path = parent.face_path + (sigma,)
                radius = region.chebyshev_radius
                if radius < 0:
                    tree.skipped.append({"stage": stage, "face_path": list(path), "reason": "empty"})
                    continue
                if radius < tol.degeneracy:
                    tree.skipped.append(
                        {"stage": stage, "face_path": list(path), "reason": "degenerate"}
                    )
                    continue
                tree.attempted_solves += 1
                box = max_inscribed_box(region, ratios, tol)
                tree.nodes.append(TreeNode(stage, path, box, node_idx))
                if box.volume >= vol_threshold:
                    next_frontier.append((len(tree.nodes) - 1, A_child, b_child))
        frontier = next_frontier
        if not frontier:
            break
    return tree


def attempted_solve_budget(dim: int, stages: int) -> int:
    """Box solves attempted when no region degenerates and nothing is pruned.

    Runs the same stage/face expansion loop as :func:`decompose_polytope` with
    the geometry stubbed out, counting one solve per visited region.
    """
    if dim < 1 or stages < 0:
        raise ValueError("need dim >= 1 and stages >= 0")
    count = 1  # root solve
    frontier = [()]
    for stage in range(1, stages + 1):
        next_frontier = []
        for path in frontier:
            for sigma in range(1, 2 * dim + 1):
                count += 1
                next_frontier.append(path + (sigma,))
        frontier = next_frontier
    return count


def coverage_ratio(
    tree: DecompositionTree,
    poly: HPolytope,
    method: str = "exact2d",
    n_samples: int = 100_000,
    seed: int = 0,
    upto_stage: int | None = None,
    tol: Tolerances = DEFAULT,
) -> float:
    """Fraction of the polytope volume covered by the union of tree boxes.

    ``exact2d`` computes both the union area (x-sweep over the boxes) and the
    polytope area exactly; ``montecarlo`` uses inclusion-exclusion for up to
    three boxes and hit sampling otherwise, with the polytope volume estimated
    by :func:`flexsum.geometry.mc_volume`.
    """
    boxes = tree.boxes(upto_stage)
    if method == "exact2d":
        if poly.dim != 2:
            raise ValueError("exact2d requires a 2D polytope")
        area = vertex_enum_2d(poly, tol).area
        return union_area_2d(boxes) / area
    if method == "montecarlo":
        denom = _mc_volume(poly, n_samples, seed, tol)
        if denom <= 0:
            raise DegenerateGeometryError("polytope volume estimate is zero")
        return union_volume_boxes(boxes, n_samples=n_samples, seed=seed + 1) / denom
    raise ValueError(f"unknown coverage method {method!r}")
