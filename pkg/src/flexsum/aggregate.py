"""Union-based Minkowski-sum assembly from per-device box decompositions.

Summing one box per device (a "tuple") gives one aggregate box that is
guaranteed to lie inside the true aggregate set; a union of such aggregate
boxes (and, in 2D, their convex hull) forms the inner approximation.  The
module also carries the exact 2D fleet oracle, Monte Carlo ground truth for
higher dimensions, accuracy metrics, and linear optimization over the union.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .decompose import DecompositionTree
from .errors import DegenerateGeometryError, EmptyPolytopeError, LPNumericalError
from .geometry import (
    AlignedBox,
    HPolytope,
    VPolygon,
    convex_hull_2d,
    minkowski_sum_2d_exact,
    union_area_2d,
    union_volume_boxes,
    vertex_enum_2d,
)
from .tolerances import DEFAULT, Tolerances

FULL_PRODUCT_CAP = 10_000
FLEET_ORACLE_CAP = 256


@dataclass(frozen=True)
class CandidateSelection:
    """Chosen per-device node indices, one tuple per aggregate box."""

    policy: str
    tuples: tuple[tuple[int, ...], ...]
    substitutions: tuple[tuple[int, int], ...] = ()  # (tuple_index, device_index)


@dataclass
class AggregateApprox:
    """Aggregate inner approximation: boxes plus an optional 2D hull."""

    boxes: list[AlignedBox]
    hull: VPolygon | None = None
    substitutions: list[tuple[int, int]] = field(default_factory=list)


def box_msum(boxes: list[AlignedBox]) -> AlignedBox:
    """Minkowski sum of aligned boxes: componentwise interval addition."""
    if not boxes:
        raise ValueError("need at least one box")
    dim = boxes[0].dim
    if any(b.dim != dim for b in boxes):
        raise ValueError("boxes have mixed dimensions")
    lo = np.sum([b.lo for b in boxes], axis=0)
    hi = np.sum([b.hi for b in boxes], axis=0)
    return AlignedBox(lo, hi)


def select_candidates(
    trees: list[DecompositionTree],
    policy: str = "stage01-faces",
    explicit: list[tuple[int, ...]] | None = None,
    full_product_cap: int = FULL_PRODUCT_CAP,
) -> CandidateSelection:
    """Pick the per-device box tuples that form the aggregate boxes.

    Policies:

    * ``stage0-only``: the single all-roots tuple.
    * ``stage01-faces``: ``2M + 1`` tuples: the all-roots tuple, then one per
      face, pairing every device's stage-1 box for that face.  A device whose
      face box is absent or degenerate contributes its root box instead
      (recorded in ``substitutions``).
    * ``full-product``: every combination of nodes, root-first ordering
      (capped at ``full_product_cap`` tuples).
    * ``explicit-list``: caller-provided tuples of node indices.
    """
    if not trees:
        raise ValueError("no decomposition trees given")
    dim = trees[0].dim
    if any(t.dim != dim for t in trees):
        raise ValueError("trees have mixed dimensions")
    roots = tuple(0 for _ in trees)

    if policy == "stage0-only":
        return CandidateSelection(policy, (roots,))

    if policy == "stage01-faces":
        tuples = [roots]
        subs = []
        for sigma in range(1, 2 * dim + 1):
            chosen = []
            for d, tree in enumerate(trees):
                node = tree.node_by_path((sigma,))
                if node is None or node.box.volume <= 0:
                    chosen.append(0)
                    subs.append((sigma, d))
                else:
                    chosen.append(tree.nodes.index(node))
            tuples.append(tuple(chosen))
        return CandidateSelection(policy, tuple(tuples), tuple(subs))

    if policy == "full-product":
        sizes = [len(t.nodes) for t in trees]
        total = int(np.prod(sizes))
        if total > full_product_cap:
            raise ValueError(f"full product has {total} tuples (cap {full_product_cap})")
        tuples = tuple(itertools.product(*[range(s) for s in sizes]))
        return CandidateSelection(policy, tuples)

    if policy == "explicit-list":
        if not explicit:
            raise ValueError("explicit-list policy needs tuples")
        for tup in explicit:
            if len(tup) != len(trees):
                raise ValueError("each tuple needs one node index per device")
            for d, idx in enumerate(tup):
                if not 0 <= idx < len(trees[d].nodes):
                    raise ValueError(f"node index {idx} out of range for device {d}")
        return CandidateSelection(policy, tuple(tuple(t) for t in explicit))

    raise ValueError(f"unknown candidate policy {policy!r}")


def union_msum(trees: list[DecompositionTree], selection: CandidateSelection) -> AggregateApprox:
    """One aggregate box per selected tuple (pure interval additions)."""
    boxes = []
    for tup in selection.tuples:
        boxes.append(box_msum([tree.nodes[idx].box for tree, idx in zip(trees, tup)]))
    return AggregateApprox(boxes=boxes, substitutions=list(selection.substitutions))


def hull_of_boxes_2d(approx: AggregateApprox) -> VPolygon:
    """Convex hull of all aggregate box corners (2D only)."""
    if not approx.boxes:
        raise ValueError("no aggregate boxes")
    if approx.boxes[0].dim != 2:
        raise ValueError("hull post-processing is 2D only")
    corners = np.vstack([b.corners() for b in approx.boxes])
    hull = convex_hull_2d(corners)
    approx.hull = hull
    return hull


def exact_fleet_msum_2d(
    polys: list[HPolytope],
    cap: int = FLEET_ORACLE_CAP,
    tol: Tolerances = DEFAULT,
) -> VPolygon:
    """Exact aggregate set of a 2D fleet: pairwise edge-merge sums, folded."""
    if not polys:
        raise ValueError("empty fleet")
    if len(polys) > cap:
        raise ValueError(f"fleet size {len(polys)} exceeds oracle cap {cap}")
    if any(p.dim != 2 for p in polys):
        raise ValueError("exact fleet oracle is 2D only")
    acc = vertex_enum_2d(polys[0], tol)
    for p in polys[1:]:
        acc = minkowski_sum_2d_exact(acc, vertex_enum_2d(p, tol), tol)
    return acc


@dataclass(frozen=True)
class AccuracyReport:
    """Volume ratios of the approximation tiers against the ground truth."""

    truth: float
    stage0_ratio: float
    union_ratio: float
    hull_ratio: float | None
    n_boxes: int
    substitutions: int

    def rows(self):
        out = [("stage0", self.stage0_ratio), ("candidates", self.union_ratio)]
        if self.hull_ratio is not None:
            out.append(("hull", self.hull_ratio))
        return out


def accuracy_report(
    approx: AggregateApprox,
    truth: VPolygon | float,
    n_samples: int = 200_000,
    seed: int = 0,
) -> AccuracyReport:
    """Per-tier accuracy: first aggregate box, box union, optional hull.

    ``truth`` is the exact 2D aggregate polygon or a volume estimate for
    higher dimensions.  In 2D the union volume is the exact sweep area;
    otherwise inclusion-exclusion (up to three boxes) or Monte Carlo.
    """
    if not approx.boxes:
        return AccuracyReport(0.0, 0.0, 0.0, None, 0, len(approx.substitutions))
    dim = approx.boxes[0].dim
    if isinstance(truth, VPolygon):
        truth_vol = truth.area
    else:
        truth_vol = float(truth)
    if truth_vol <= 0:
        raise DegenerateGeometryError("ground truth volume must be positive")
    stage0 = approx.boxes[0].volume / truth_vol
    if dim == 2:
        union = union_area_2d(approx.boxes) / truth_vol
    else:
        union = union_volume_boxes(approx.boxes, n_samples=n_samples, seed=seed) / truth_vol
    hull_ratio = approx.hull.area / truth_vol if approx.hull is not None else None
    return AccuracyReport(
        truth=truth_vol,
        stage0_ratio=stage0,
        union_ratio=union,
        hull_ratio=hull_ratio,
        n_boxes=len(approx.boxes),
        substitutions=len(approx.substitutions),
    )


def optimize_over_union(cost, approx: AggregateApprox):
    """Minimize a linear cost over the box union.

    Per-box minima are closed form (pick ``lo`` or ``hi`` per sign); returns
    ``(argmin, value, box_index)`` of the best box.
    """
    if not approx.boxes:
        raise EmptyPolytopeError("no aggregate boxes to optimize over")
    c = np.asarray(cost, dtype=float)
    best = None
    for idx, box in enumerate(approx.boxes):
        x = np.where(c > 0, box.lo, box.hi)
        val = float(c @ x)
        if best is None or val < best[1] - 1e-15:
            best = (x, val, idx)
    return best


def random_tuple_boxes(trees: list[DecompositionTree], count: int, seed: int) -> list[AlignedBox]:
    """Aggregate boxes of random per-device node tuples.

    Every tuple sum is a certified subset of the true aggregate set, so these
    make cheap acceptance certificates for the Monte Carlo ground truth.
    """
    rng = np.random.default_rng(seed)
    sizes = [len(t.nodes) for t in trees]
    out = []
    for _ in range(count):
        tup = [int(rng.integers(s)) for s in sizes]
        out.append(box_msum([tree.nodes[i].box for tree, i in zip(trees, tup)]))
    return out


# ------------------------------------------------------------- MC ground truth


def _split_certificates(polys, weights_list, tol):
    """Stacked row systems certifying membership via fixed affine splits.

    For split weights ``S_i`` (per device, per coordinate, summing to one
    across devices) and device centers ``c_i``, the candidate decomposition
    ``x_i = c_i + S_i * (z - c)`` satisfies ``sum x_i = z``; checking
    ``A_i x_i <= b_i`` for all devices is one matrix inequality ``W z <= v``.
    Membership in any one certificate proves membership in the sum.
    """
    centers = [np.asarray(p.chebyshev()[0]) for p in polys]
    c_total = np.sum(centers, axis=0)
    systems = []
    for S in weights_list:
        rows, offs = [], []
        for p, c_i, s_i in zip(polys, centers, S):
            W = p.A * s_i[None, :]
            rows.append(W)
            offs.append(p.b - p.A @ c_i + W @ c_total)
        systems.append((np.vstack(rows), np.concatenate(offs)))
    return systems


def minkowski_sum_volume_mc(
    polys: list[HPolytope],
    n_samples: int = 1_000_000,
    seed: int = 0,
    inner_boxes: list[AlignedBox] | None = None,
    n_directions: int = 256,
    n_adaptive_splits: int = 128,
    max_cuts: int = 12_288,
    tol: Tolerances = DEFAULT,
    return_stats: bool = False,
):
    """Monte Carlo volume of the Minkowski sum of H-polytopes.

    Samples the exact bounding box of the sum (componentwise sums of the
    per-device bounding boxes) and classifies every sample exactly:

    * accept when an affine split certificate or a certified inner box
      proves membership (vectorized matrix tests);
    * reject when a support-function cut ``u @ z <= sum_i h_i(u)`` is
      violated; the direction set holds every device constraint-row normal,
      seeded random directions, and Farkas directions harvested from
      infeasible samples (with exact support offsets);
    * decide the residue with an LP minimizing the worst constraint
      violation of ``sum x_i = z, x_i in P_i``.  A feasible verdict donates a
      tailored split certificate (capped at ``n_adaptive_splits``), an
      infeasible one donates a separating cut, so recurring shell regions
      avoid further LPs.

    Every route is exact, so the estimate is unbiased MC volume with a
    deterministic, seed-reproducible sample stream.
    """
    from scipy.optimize import linprog

    if not polys:
        raise ValueError("empty fleet")
    dim = polys[0].dim
    if any(p.dim != dim for p in polys):
        raise ValueError("mixed dimensions")
    n_dev = len(polys)
    # Row normalization makes LP margins Euclidean distances in z-space.
    norm_polys = []
    for p in polys:
        norms = np.linalg.norm(p.A, axis=1)
        norm_polys.append(HPolytope.trusted(p.A / norms[:, None], p.b / norms))

    device_boxes = [p.bounding_box(tol) for p in polys]
    lo = np.sum([b.lo for b in device_boxes], axis=0)
    hi = np.sum([b.hi for b in device_boxes], axis=0)
    box_vol = float(np.prod(hi - lo))
    if box_vol <= 0:
        return (0.0, {}) if return_stats else 0.0

    rng = np.random.default_rng(seed)

    def support_sum(u):
        return sum(p.support(u, tol) for p in polys)

    # Rejection cuts: every device constraint-row direction (the natural
    # facet normals of the sum) plus seeded random directions, all with exact
    # support offsets.
    row_dirs = np.vstack([p.A for p in norm_polys])
    row_dirs = np.unique(np.round(row_dirs, 12), axis=0)
    rand_dirs = rng.normal(size=(n_directions, dim))
    rand_dirs /= np.linalg.norm(rand_dirs, axis=1, keepdims=True)
    dirs = np.vstack([row_dirs, rand_dirs])
    offsets = np.array([support_sum(u) for u in dirs])

    centers = [np.asarray(p.chebyshev()[0]) for p in norm_polys]
    c_total = np.sum(centers, axis=0)

    def tailored_split(parts, z):
        """Split weights that reproduce the decomposition ``parts`` at ``z``."""
        denom = z - c_total
        safe = np.abs(denom) > 1e-9 * (1.0 + np.abs(z))
        S = np.empty((n_dev, dim))
        for i in range(n_dev):
            S[i] = np.where(safe, (parts[i] - centers[i]) / np.where(safe, denom, 1.0), 1.0 / n_dev)
        total = S.sum(axis=0, keepdims=True)
        return list(S / np.where(np.abs(total) > 1e-12, total, 1.0))

    def support_split(u):
        """Tailored split at the support point of direction ``u``."""
        parts = []
        for p in norm_polys:
            sol = lp.solve(u, p.A, p.b, tol)
            if sol.status != lp.OPTIMAL:
                return None
            parts.append(sol.x)
        return tailored_split(parts, np.sum(parts, axis=0))

    # Split certificates: uniform, width-proportional, and support splits
    # along the box corner and axis directions (they cover the shell regions
    # where feasibility needs carefully unbalanced decompositions).
    weight_sets = [[np.full(dim, 1.0 / n_dev) for _ in polys]]
    widths = np.stack([b.widths for b in device_boxes])
    totals = widths.sum(axis=0)
    prop = np.where(totals > 0, widths / np.where(totals > 0, totals, 1.0), 1.0 / n_dev)
    weight_sets.append(list(prop))
    extreme_dirs = []
    if dim <= 10:
        extreme_dirs.extend(np.array(c, dtype=float) for c in itertools.product((-1.0, 1.0), repeat=dim))
    for k in range(dim):
        for sign in (1.0, -1.0):
            e = np.zeros(dim)
            e[k] = sign
            extreme_dirs.append(e)
    for u in extreme_dirs:
        s = support_split(u / np.linalg.norm(u))
        if s is not None:
            weight_sets.append(s)
    splits = _split_certificates(norm_polys, weight_sets, tol)

    inner_lo = inner_hi = None
    if inner_boxes:
        inner_lo = np.stack([b.lo for b in inner_boxes])
        inner_hi = np.stack([b.hi for b in inner_boxes])

    # Residual LP (last device eliminated): variables (x_1..x_{n-1}, t),
    # rows A_i x_i - t <= b_i and -A_n sum(x_i) - t <= b_n - A_n z;
    # z is in the sum iff min t <= 0.
    if n_dev > 1:
        blocks = []
        for i, p in enumerate(norm_polys[:-1]):
            row = np.zeros((p.A.shape[0], dim * (n_dev - 1)))
            row[:, i * dim : (i + 1) * dim] = p.A
            blocks.append(row)
        last = np.tile(-norm_polys[-1].A, (1, n_dev - 1))
        Gx = np.vstack(blocks + [last])
        G = np.hstack([Gx, -np.ones((Gx.shape[0], 1))])
        h_fixed = np.concatenate([p.b for p in norm_polys[:-1]])
        cost = np.zeros(G.shape[1])
        cost[-1] = 1.0
        A_last, b_last = norm_polys[-1].A, norm_polys[-1].b
        n_fixed = h_fixed.size

    feas = tol.feasibility

    def classify_lp(z):
        """(is_member, split_or_None, farkas_dir_or_None) for one gray sample."""
        if n_dev == 1:
            return norm_polys[0].contains(z, feas), None, None
        h = np.concatenate([h_fixed, b_last - A_last @ z])
        res = linprog(cost, A_ub=G, b_ub=h, bounds=(None, None), method="highs")
        if res.status != 0:
            raise LPNumericalError(f"membership LP returned status {res.status}")
        if res.fun <= feas:
            x = res.x[:-1].reshape(n_dev - 1, dim)
            parts = list(x) + [z - x.sum(axis=0)]
            return True, tailored_split(parts, z), None
        y = np.maximum(-np.asarray(res.ineqlin.marginals), 0.0)
        u = A_last.T @ y[n_fixed:]
        norm = np.linalg.norm(u)
        if norm < 1e-12:
            return False, None, None
        return False, None, u / norm

    hits = 0
    stats = {"lp_calls": 0, "cut_rejects": 0, "split_accepts": 0, "box_accepts": 0, "n_splits": 0}
    remaining = int(n_samples)
    batch = 1 << 14
    while remaining > 0:
        k = min(batch, remaining)
        Z = rng.uniform(lo, hi, size=(k, dim))
        undecided = np.ones(k, dtype=bool)
        accepted = np.zeros(k, dtype=bool)

        for W, v in splits:
            idx = np.flatnonzero(undecided)
            if idx.size == 0:
                break
            good = ((Z[idx] @ W.T) <= v + feas).all(axis=1)
            accepted[idx[good]] = True
            undecided[idx[good]] = False
            stats["split_accepts"] += int(good.sum())

        if inner_lo is not None and undecided.any():
            idx = np.flatnonzero(undecided)
            inside = np.zeros(idx.size, dtype=bool)
            Zu = Z[idx]
            for blo, bhi in zip(inner_lo, inner_hi):
                inside |= ((Zu >= blo - feas) & (Zu <= bhi + feas)).all(axis=1)
            accepted[idx[inside]] = True
            undecided[idx[inside]] = False
            stats["box_accepts"] += int(inside.sum())

        if undecided.any():
            idx = np.flatnonzero(undecided)
            viol = (Z[idx] @ dirs.T > offsets + feas).any(axis=1)
            undecided[idx[viol]] = False
            stats["cut_rejects"] += int(viol.sum())

        for idx in np.flatnonzero(undecided):
            member, new_split, farkas = classify_lp(Z[idx])
            stats["lp_calls"] += 1
            if member:
                accepted[idx] = True
                if new_split is not None and len(splits) < len(weight_sets) + n_adaptive_splits:
                    splits.extend(_split_certificates(norm_polys, [new_split], tol))
            elif farkas is not None and len(offsets) < max_cuts:
                dirs = np.vstack([dirs, farkas])
                offsets = np.append(offsets, support_sum(farkas))
        hits += int(accepted.sum())
        remaining -= k
    stats["n_splits"] = len(splits)
    est = box_vol * hits / n_samples
    return (est, stats) if return_stats else est
