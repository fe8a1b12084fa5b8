"""Convex-geometry primitives: H-polytopes, 2D polygons, aligned boxes.

All types are immutable and all operations are pure functions, so everything
in this module is safe to call concurrently.  Exact algorithms are restricted
to 2D (vertex enumeration, convex hull, Minkowski sums); higher dimensions are
served by LP-based queries and Monte Carlo volume estimation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp
from .errors import (
    DegenerateGeometryError,
    EmptyPolytopeError,
    UnboundedPolytopeError,
)
from .tolerances import DEFAULT, Tolerances


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _cross2(u, v):
    """z-component of the cross product of 2D vectors (broadcasts)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


@dataclass(frozen=True)
class HalfSpace:
    """The set ``{x : normal @ x <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = _readonly(np.atleast_1d(self.normal))
        if not np.isfinite(n).all() or not (np.abs(n) > 0).any():
            raise ValueError("half-space normal must be a finite nonzero vector")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))


class HPolytope:
    """Bounded, non-empty polytope ``{x : A x <= b}``.

    The public constructor certifies boundedness and non-emptiness with LPs;
    code that already holds such a certificate can use :meth:`trusted` to skip
    the checks (used heavily when slicing decomposition regions).
    """

    __slots__ = ("A", "b", "_cheb")

    def __init__(self, A, b, tol: Tolerances = DEFAULT):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        self._validate_shapes(A, b)
        self.A = _readonly(A)
        self.b = _readonly(b)
        self._cheb = None
        center, radius = self.chebyshev()
        if radius < 0:
            raise EmptyPolytopeError("polytope is empty")
        for k in range(self.dim):
            for sign in (1.0, -1.0):
                direction = np.zeros(self.dim)
                direction[k] = sign
                if lp.solve(direction, self.A, self.b, tol).status != lp.OPTIMAL:
                    raise UnboundedPolytopeError(f"polytope unbounded along axis {k}")

    @staticmethod
    def _validate_shapes(A, b):
        if A.ndim != 2 or A.shape[0] != b.size:
            raise ValueError(f"inconsistent H-rep shapes: A {A.shape}, b {b.shape}")
        if A.shape[1] < 1:
            raise ValueError("dimension must be >= 1")
        if not (np.isfinite(A).all() and np.isfinite(b).all()):
            raise ValueError("H-rep data must be finite")
        if (np.abs(A).max(axis=1) == 0).any():
            raise ValueError("every row of A needs a nonzero entry")

    @classmethod
    def trusted(cls, A, b) -> "HPolytope":
        """Construct without LP certification (caller guarantees the invariants)."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        cls._validate_shapes(A, b)
        obj = object.__new__(cls)
        object.__setattr__(obj, "A", _readonly(A))
        object.__setattr__(obj, "b", _readonly(b))
        object.__setattr__(obj, "_cheb", None)
        return obj

    def __setattr__(self, name, value):  # immutability after __init__
        if name in self.__slots__ and getattr(self, name, None) is not None:
            raise AttributeError("HPolytope is immutable")
        object.__setattr__(self, name, value)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def chebyshev(self):
        """(center, radius) of the largest inscribed ball; radius < 0 means empty."""
        if self._cheb is None:
            object.__setattr__(self, "_cheb", lp.chebyshev_ball(self.A, self.b))
        return self._cheb

    @property
    def chebyshev_radius(self) -> float:
        return self.chebyshev()[1]

    def is_degenerate(self, tol: Tolerances = DEFAULT) -> bool:
        """True when the set has (numerically) zero volume."""
        return self.chebyshev_radius < tol.degeneracy

    def contains(self, x, tol: float = DEFAULT.feasibility) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dim:
            raise ValueError(f"point has dimension {x.size}, polytope {self.dim}")
        return bool((self.A @ x <= self.b + tol).all())

    def support(self, direction, tol: Tolerances = DEFAULT) -> float:
        """max ``direction @ x`` over the polytope."""
        sol = lp.solve(np.asarray(direction, float), self.A, self.b, tol)
        if sol.status != lp.OPTIMAL:
            raise UnboundedPolytopeError(f"support LP status {sol.status}")
        return float(sol.value)

    def bounding_box(self, tol: Tolerances = DEFAULT) -> "AlignedBox":
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = 1.0
            hi[k] = self.support(e, tol)
            lo[k] = -self.support(-e, tol)
        return AlignedBox(lo, hi)

    def __repr__(self):
        return f"HPolytope(dim={self.dim}, rows={self.n_rows})"


class VPolygon:
    """Strictly convex 2D polygon, vertices counter-clockwise.

    The constructor removes duplicate and collinear vertices, verifies
    convexity and orientation, and rotates the list so it starts at the
    lexicographically smallest vertex (deterministic representation).
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices, tol: Tolerances = DEFAULT):
        pts = np.atleast_2d(np.asarray(vertices, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("expected an (n, 2) array of vertices")
        if not np.isfinite(pts).all():
            raise ValueError("vertices must be finite")
        pts = self._dedup(pts, tol.vertex_dedup)
        if len(pts) < 3:
            raise DegenerateGeometryError("fewer than 3 distinct vertices")
        if _signed_area(pts) < 0:
            pts = pts[::-1]
        pts = self._drop_collinear(pts)
        if len(pts) < 3:
            raise DegenerateGeometryError("polygon is degenerate (collinear vertices)")
        cross = _turn_crosses(pts)
        if not (cross > 0).all():
            raise ValueError("vertices do not describe a convex CCW polygon")
        start = int(np.lexsort((pts[:, 1], pts[:, 0]))[0])
        object.__setattr__(self, "vertices", _readonly(np.roll(pts, -start, axis=0)))

    @staticmethod
    def _dedup(pts, eps):
        keep = [pts[0]]
        for p in pts[1:]:
            if np.abs(p - keep[-1]).max() > eps:
                keep.append(p)
        if len(keep) > 1 and np.abs(keep[0] - keep[-1]).max() <= eps:
            keep.pop()
        return np.array(keep)

    @staticmethod
    def _drop_collinear(pts, eps=1e-12):
        scale = max(1.0, float(np.abs(pts).max()))
        keep = []
        n = len(pts)
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            if _cross2(b - a, c - b) > eps * scale * scale:
                keep.append(b)
        return np.array(keep) if keep else pts[:0]

    def __setattr__(self, name, value):
        raise AttributeError("VPolygon is immutable")

    def __len__(self):
        return len(self.vertices)

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def contains(self, point, tol: float = DEFAULT.feasibility) -> bool:
        """Point-in-polygon with an absolute tolerance on normalized edge offsets."""
        p = np.asarray(point, dtype=float)
        v = self.vertices
        e = self.edges()
        normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
        norms = np.linalg.norm(normals, axis=1)
        lhs = ((p - v) * normals).sum(axis=1) / norms
        return bool((lhs <= tol).all())

    def to_hpolytope(self) -> HPolytope:
        """H-rep from the edge outward normals (normalized rows)."""
        v = self.vertices
        e = self.edges()
        normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
        norms = np.linalg.norm(normals, axis=1, keepdims=True)
        A = normals / norms
        b = (A * v).sum(axis=1)
        return HPolytope.trusted(A, b)

    def __repr__(self):
        return f"VPolygon({len(self)} vertices, area={self.area:.6g})"


def _signed_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _turn_crosses(pts: np.ndarray) -> np.ndarray:
    prev = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    return _cross2(pts - prev, nxt - pts)


@dataclass(frozen=True)
class AlignedBox:
    """Axis-aligned box ``[lo, hi]`` in R^M; ``lo == hi`` (point) is allowed."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _readonly(np.atleast_1d(self.lo))
        hi = _readonly(np.atleast_1d(self.hi))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1D arrays of equal length")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ValueError("box bounds must be finite")
        if (hi - lo < -1e-12).any():
            raise ValueError("box has hi < lo")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def widths(self) -> np.ndarray:
        return np.maximum(self.hi - self.lo, 0.0)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, tol: float = DEFAULT.feasibility) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(((x >= self.lo - tol) & (x <= self.hi + tol)).all())

    def corners(self) -> np.ndarray:
        """All 2^M corners (guarded against runaway dimensions)."""
        if self.dim > 16:
            raise ValueError("corner enumeration limited to dimension 16")
        grids = np.meshgrid(*[(self.lo[k], self.hi[k]) for k in range(self.dim)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def to_polygon(self) -> VPolygon:
        if self.dim != 2 or self.volume <= 0:
            raise DegenerateGeometryError("need a full-dimensional 2D box")
        (x0, y0), (x1, y1) = self.lo, self.hi
        return VPolygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    def to_hpolytope(self) -> HPolytope:
        eye = np.eye(self.dim)
        return HPolytope.trusted(np.vstack([eye, -eye]), np.concatenate([self.hi, -self.lo]))

    def intersect(self, other: "AlignedBox") -> "AlignedBox | None":
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if (hi <= lo).any():
            return None
        return AlignedBox(lo, hi)

    def reversed_face(self, sigma: int) -> HalfSpace:
        """Half-space lying beyond face ``sigma`` of the box.

        Faces are numbered 1..2M as (x1 lower, x1 upper, x2 lower, ...):
        face 2k-1 yields ``{x_k <= lo_k}``, face 2k yields ``{x_k >= hi_k}``.
        """
        if not 1 <= sigma <= 2 * self.dim:
            raise ValueError(f"face index {sigma} out of range 1..{2 * self.dim}")
        k, upper = divmod(sigma - 1, 2)
        e = np.zeros(self.dim)
        if upper:
            e[k] = -1.0
            return HalfSpace(e, -float(self.hi[k]))
        e[k] = 1.0
        return HalfSpace(e, float(self.lo[k]))


# ---------------------------------------------------------------------------
# operations


def contains(poly: HPolytope, x, tol: float = DEFAULT.feasibility) -> bool:
    """Componentwise ``A x <= b + tol`` membership test."""
    return poly.contains(x, tol)


def convex_hull_2d(points, tol: Tolerances = DEFAULT) -> VPolygon:
    """Convex hull of 2D points via Andrew's monotone chain, O(n log n).

    Ties are broken lexicographically by (x, y); collinear boundary points are
    dropped so the result is strictly convex.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 2:
        raise ValueError("expected 2D points")
    if len(pts) < 3:
        raise DegenerateGeometryError("need at least 3 points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    scale = max(1.0, float(np.abs(pts).max()))
    eps = 1e-12 * scale * scale

    def build(seq):
        chain: list[np.ndarray] = []
        for p in seq:
            while len(chain) >= 2 and _cross2(chain[-1] - chain[-2], p - chain[-1]) <= eps:
                chain.pop()
            chain.append(p)
        return chain

    lower = build(pts)
    upper = build(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateGeometryError("all points are collinear")
    return VPolygon(np.array(hull), tol)


def polygon_area(poly: VPolygon) -> float:
    """Shoelace area (positive for the CCW polygons this package produces)."""
    area = poly.area
    if len(poly) < 3:
        raise DegenerateGeometryError("area needs at least 3 vertices")
    return area


def vertex_enum_2d(poly: HPolytope, tol: Tolerances = DEFAULT) -> VPolygon:
    """Enumerate the vertices of a bounded full-dimensional 2D polytope.

    Intersects every constraint pair, keeps the feasible intersections,
    deduplicates, and orders them counter-clockwise.  Redundant constraints
    are ignored by construction.
    """
    if poly.dim != 2:
        raise ValueError("vertex enumeration is only supported in 2D")
    center, radius = poly.chebyshev()
    if radius < 0:
        raise EmptyPolytopeError("cannot enumerate vertices of an empty polytope")
    if radius < tol.degeneracy:
        raise DegenerateGeometryError("polytope is lower-dimensional")
    A, b = poly.A, poly.b
    norms = np.linalg.norm(A, axis=1)
    An = A / norms[:, None]
    bn = b / norms
    m = len(b)
    i_idx, j_idx = np.triu_indices(m, k=1)
    a1, a2 = An[i_idx], An[j_idx]
    det = a1[:, 0] * a2[:, 1] - a1[:, 1] * a2[:, 0]
    ok = np.abs(det) > 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        x = (bn[i_idx] * a2[:, 1] - bn[j_idx] * a1[:, 1]) / det
        y = (a1[:, 0] * bn[j_idx] - a2[:, 0] * bn[i_idx]) / det
    cand = np.stack([x[ok], y[ok]], axis=1)
    feas_tol = 1e-8 * max(1.0, float(np.abs(bn).max()))
    feasible = cand[(cand @ An.T <= bn + feas_tol).all(axis=1)]
    if len(feasible) < 3:
        raise DegenerateGeometryError("fewer than 3 vertices found")
    # Cluster duplicates, then order CCW around the Chebyshev center.
    feasible = _dedup_points(feasible, tol.vertex_dedup * 10 + 1e-12)
    angles = np.arctan2(feasible[:, 1] - center[1], feasible[:, 0] - center[0])
    return VPolygon(feasible[np.argsort(angles)], tol)


def _dedup_points(pts: np.ndarray, eps: float) -> np.ndarray:
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = []
    for p in pts:
        if not keep or min(np.abs(p - q).max() for q in keep[-8:]) > eps:
            keep.append(p)
    return np.array(keep)


def minkowski_sum_2d_exact(p1: VPolygon, p2: VPolygon, tol: Tolerances = DEFAULT) -> VPolygon:
    """Exact Minkowski sum of two convex polygons by merging edge sequences.

    Both edge cycles are rotated to start at the bottom-most (then left-most)
    vertex and merged by polar angle; parallel edges are combined, so the
    result has at most ``n1 + n2`` vertices.
    """
    v1 = _rotate_to_bottom(p1.vertices)
    v2 = _rotate_to_bottom(p2.vertices)
    e1 = np.roll(v1, -1, axis=0) - v1
    e2 = np.roll(v2, -1, axis=0) - v2
    a1 = np.mod(np.arctan2(e1[:, 1], e1[:, 0]), 2.0 * np.pi)
    a2 = np.mod(np.arctan2(e2[:, 1], e2[:, 0]), 2.0 * np.pi)
    n1, n2 = len(v1), len(v2)
    i = j = 0
    cur = v1[0] + v2[0]
    out = [cur]
    while i < n1 or j < n2:
        if i >= n1:
            step = e2[j]
            j += 1
        elif j >= n2:
            step = e1[i]
            i += 1
        elif abs(a1[i] - a2[j]) <= 1e-12:
            step = e1[i] + e2[j]
            i += 1
            j += 1
        elif a1[i] < a2[j]:
            step = e1[i]
            i += 1
        else:
            step = e2[j]
            j += 1
        cur = cur + step
        out.append(cur)
    return VPolygon(np.array(out[:-1]), tol)


def _rotate_to_bottom(v: np.ndarray) -> np.ndarray:
    start = int(np.lexsort((v[:, 0], v[:, 1]))[0])
    return np.roll(v, -start, axis=0)


def intersect_halfspace(poly: HPolytope, hs: HalfSpace, tol: Tolerances = DEFAULT):
    """Append one half-space row and classify the result.

    Returns ``(polytope, status)`` with status one of ``"ok"``,
    ``"degenerate"`` (nonempty but zero volume) or ``"empty"``.
    """
    if hs.normal.size != poly.dim:
        raise ValueError("half-space dimension mismatch")
    A = np.vstack([poly.A, hs.normal])
    b = np.concatenate([poly.b, [hs.offset]])
    out = HPolytope.trusted(A, b)
    radius = out.chebyshev_radius
    if radius < 0:
        return out, "empty"
    if radius < tol.degeneracy:
        return out, "degenerate"
    return out, "ok"


def mc_volume(poly: HPolytope, n_samples: int, seed: int, tol: Tolerances = DEFAULT) -> float:
    """Monte Carlo volume: bounding box (2M LPs) times the sample hit rate.

    Deterministic for a fixed seed; samples are drawn in fixed-size batches
    from a single generator stream.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if poly.chebyshev_radius < 0:
        raise EmptyPolytopeError("cannot sample an empty polytope")
    box = poly.bounding_box(tol)
    box_vol = box.volume
    if box_vol == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = int(n_samples)
    batch = 1 << 16
    while remaining > 0:
        k = min(batch, remaining)
        pts = rng.uniform(box.lo, box.hi, size=(k, poly.dim))
        hits += int(((pts @ poly.A.T) <= poly.b + tol.feasibility).all(axis=1).sum())
        remaining -= k
    return box_vol * hits / n_samples


def union_area_2d(boxes) -> float:
    """Exact area of a union of (possibly overlapping) 2D boxes via x-sweep."""
    boxes = [bx for bx in boxes if bx.volume > 0]
    if not boxes:
        return 0.0
    xs = np.unique(np.concatenate([[bx.lo[0], bx.hi[0]] for bx in boxes]))
    total = 0.0
    for x0, x1 in zip(xs[:-1], xs[1:]):
        spans = sorted(
            (bx.lo[1], bx.hi[1]) for bx in boxes if bx.lo[0] <= x0 and bx.hi[0] >= x1
        )
        if not spans:
            continue
        length = 0.0
        cur_lo, cur_hi = spans[0]
        for lo, hi in spans[1:]:
            if lo > cur_hi:
                length += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        length += cur_hi - cur_lo
        total += length * (x1 - x0)
    return total


def union_volume_boxes(boxes, n_samples: int = 200_000, seed: int = 0) -> float:
    """Volume of a union of aligned boxes.

    Exact inclusion-exclusion is used for up to 3 boxes; larger unions fall
    back to Monte Carlo hit counting against the union's bounding box
    (2D callers should prefer :func:`union_area_2d`, which is exact).
    """
    boxes = [bx for bx in boxes if bx.volume > 0]
    if not boxes:
        return 0.0
    if len(boxes) <= 3:
        return _union_volume_inclusion_exclusion(boxes)
    lo = np.min([bx.lo for bx in boxes], axis=0)
    hi = np.max([bx.hi for bx in boxes], axis=0)
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = int(n_samples)
    batch = 1 << 16
    los = np.stack([bx.lo for bx in boxes])
    his = np.stack([bx.hi for bx in boxes])
    while remaining > 0:
        k = min(batch, remaining)
        pts = rng.uniform(lo, hi, size=(k, lo.size))
        inside = np.zeros(k, dtype=bool)
        for blo, bhi in zip(los, his):
            inside |= ((pts >= blo) & (pts <= bhi)).all(axis=1)
        hits += int(inside.sum())
        remaining -= k
    return float(np.prod(hi - lo)) * hits / n_samples


def _union_volume_inclusion_exclusion(boxes) -> float:
    total = 0.0
    n = len(boxes)
    for mask in range(1, 1 << n):
        chosen = [boxes[i] for i in range(n) if mask >> i & 1]
        inter = chosen[0]
        for bx in chosen[1:]:
            inter = inter.intersect(bx)
            if inter is None:
                break
        if inter is None:
            continue
        total += (-1) ** (bin(mask).count("1") + 1) * inter.volume
    return total
