#!/usr/bin/env python3
"""Storage fleet study in R^6 (3 h horizon, 30 min steps).

Builds a fleet of storage-like loads with uniformly drawn parameters,
decomposes each polytope without ratio constraints, reports mean coverage per
stage, then estimates aggregate accuracy for random 5-device subfleets
against a Monte Carlo ground-truth volume of the exact Minkowski sum.
"""

import argparse
import time

import numpy as np

from flexsum.aggregate import (
    accuracy_report,
    minkowski_sum_volume_mc,
    random_tuple_boxes,
    select_candidates,
    union_msum,
)
from flexsum.decompose import coverage_ratio, decompose_polytope
from flexsum.devices import BatteryParams, battery_polytope


def draw_fleet(rng, n_devices):
    params = []
    for _ in range(n_devices):
        params.append(
            BatteryParams(
                p_min=0.0,
                p_max=float(rng.uniform(3.0, 4.5)),
                a=float(rng.uniform(0.9, 1.0)),
                gamma=float(rng.uniform(0.035, 0.053)),
                e0=float(rng.uniform(0.2, 0.6)),
                horizon=6,
            )
        )
    return params


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--devices", type=int, default=100)
    parser.add_argument("--stages", type=int, default=2)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--subfleets", type=int, default=1)
    parser.add_argument("--truth-samples", type=int, default=1_000_000)
    parser.add_argument("--coverage-samples", type=int, default=30_000)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    params = draw_fleet(rng, args.devices)
    polys = [battery_polytope(p) for p in params]

    t0 = time.perf_counter()
    trees = [decompose_polytope(p, None, n_s=args.stages, device_id=f"dev{i:03d}") for i, p in enumerate(polys)]
    print(f"decomposed {len(polys)} devices to stage {args.stages} in {time.perf_counter() - t0:.1f}s")

    for s in range(args.stages + 1):
        covs = [
            coverage_ratio(t, p, "montecarlo", n_samples=args.coverage_samples, seed=args.seed + 100 + i, upto_stage=s)
            for i, (t, p) in enumerate(zip(trees, polys))
        ]
        print(f"stage {s}: mean coverage {np.mean(covs):.3f}")

    sel = select_candidates(trees, "stage01-faces")
    print(f"candidate aggregate boxes: {len(sel.tuples)}")

    for rep in range(args.subfleets):
        chosen = sorted(rng.choice(len(polys), size=min(5, len(polys)), replace=False).tolist())
        sub_polys = [polys[i] for i in chosen]
        sub_trees = [trees[i] for i in chosen]
        sub_sel = select_candidates(sub_trees, "stage01-faces")
        sub_approx = union_msum(sub_trees, sub_sel)
        inner = sub_approx.boxes + random_tuple_boxes(sub_trees, 400, seed=args.seed + 7 + rep)
        t0 = time.perf_counter()
        truth = minkowski_sum_volume_mc(
            sub_polys, n_samples=args.truth_samples, seed=args.seed + 11 + rep, inner_boxes=inner
        )
        report = accuracy_report(sub_approx, truth, n_samples=args.truth_samples, seed=args.seed + 13 + rep)
        print(
            f"subfleet {chosen}: stage0 {report.stage0_ratio:.3f}, "
            f"candidates {report.union_ratio:.3f} (truth MC in {time.perf_counter() - t0:.1f}s)"
        )


if __name__ == "__main__":
    main()
