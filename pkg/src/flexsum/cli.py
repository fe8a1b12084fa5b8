"""Command-line pipeline: build, decompose, aggregate, plot, validate.

Artifacts are JSON (polytope bundles, decomposition trees, aggregate
approximations) and CSV (accuracy metrics).  Outputs are byte-deterministic
for a fixed scenario and seed; opt-in wall-clock columns are the only
exception (``--timings``).

Exit codes: 0 success, 1 validation-check failure, 2 schema error,
3 infeasible device model, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .aggregate import (
    accuracy_report,
    exact_fleet_msum_2d,
    hull_of_boxes_2d,
    minkowski_sum_volume_mc,
    random_tuple_boxes,
    select_candidates,
    union_msum,
)
from .decompose import (
    DecompositionTree,
    PrototypeRatios,
    TreeNode,
    coverage_ratio,
    decompose_polytope,
    representative_box_ratios,
)
from .devices import battery_polytope, inverter_polytope, load_interval
from .errors import (
    FlexsumError,
    InfeasibleModelError,
    LPNumericalError,
    ScenarioError,
)
from .geometry import AlignedBox, HPolytope, VPolygon, vertex_enum_2d
from .plotting import render_svg
from .scenario import RealizedDevice, Scenario, Settings, load_scenario, realize_devices
from .tolerances import PROFILES, Tolerances

FLEET_ORACLE_LIMIT = 256
SUBFLEET_SIZE = 5


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def _device_polytope(dev: RealizedDevice, tol: Tolerances) -> HPolytope:
    if dev.kind in ("pv-inverter", "storage-inverter"):
        return inverter_polytope(dev.params, tol)
    if dev.kind == "load":
        return load_interval(*dev.params).to_hpolytope()
    if dev.kind == "battery":
        return battery_polytope(dev.params, tol)
    raise ValueError(f"unknown device kind {dev.kind!r}")


def _params_dict(dev: RealizedDevice) -> dict:
    if dev.kind == "load":
        return {"p_min": dev.params[0], "p_max": dev.params[1]}
    out = {k: v for k, v in dev.params.__dict__.items()}
    return out


# ------------------------------------------------------------------- commands


def cmd_build(scenario_path: str, output: str, tol: Tolerances, seed: int | None = None) -> dict:
    """Realize every device of the scenario into an H-rep bundle."""
    scenario = load_scenario(scenario_path)
    if seed is not None:
        scenario.settings = replace(scenario.settings, seed=seed)
    devices = realize_devices(scenario)
    entries = []
    dims = set()
    for idx, dev in enumerate(devices):
        try:
            poly = _device_polytope(dev, tol)
        except InfeasibleModelError as exc:
            raise InfeasibleModelError(f"device {idx} ({dev.device_id}): {exc}") from exc
        dims.add(poly.dim)
        entries.append(
            {
                "id": dev.device_id,
                "type": dev.kind,
                "params": _params_dict(dev),
                "A": poly.A.tolist(),
                "b": poly.b.tolist(),
            }
        )
    if len(dims) != 1:
        raise ScenarioError(f"devices have mixed dimensions {sorted(dims)}")
    bundle = {
        "dim": dims.pop(),
        "devices": entries,
        "settings": _settings_dict(scenario.settings),
    }
    _dump_json(Path(output), bundle)
    return bundle


def _settings_dict(settings: Settings) -> dict:
    out = dict(settings.__dict__)
    if isinstance(out["ratio_mode"], tuple):
        out["ratio_mode"] = list(out["ratio_mode"])
    return out


def _load_bundle(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read bundle: {exc}") from exc


def _bundle_polytopes(bundle: dict) -> list[HPolytope]:
    return [HPolytope.trusted(np.array(d["A"]), np.array(d["b"])) for d in bundle["devices"]]


def _resolve_ratios(bundle: dict, polys: list[HPolytope], tol: Tolerances) -> PrototypeRatios | None:
    mode = bundle["settings"].get("ratio_mode", "auto")
    dim = bundle["dim"]
    if mode == "auto":
        mode = "largest-area" if dim == 2 else "none"
    if mode == "none":
        return None
    if isinstance(mode, (list, tuple)):
        return PrototypeRatios(np.asarray(mode, dtype=float))
    return representative_box_ratios(polys, mode, tol)


def cmd_decompose(
    bundle_path: str, output: str, tol: Tolerances, threads: int = 1, quiet: bool = False
) -> dict:
    """Decompose every device polytope and print per-stage coverage."""
    bundle = _load_bundle(bundle_path)
    settings = bundle["settings"]
    polys = _bundle_polytopes(bundle)
    ratios = _resolve_ratios(bundle, polys, tol)
    n_s = settings.get("n_s", 1)
    vol_threshold = settings.get("vol_threshold")

    def work(item):
        idx, poly = item
        return decompose_polytope(
            poly,
            ratios,
            n_s=n_s,
            vol_threshold=vol_threshold,
            device_id=bundle["devices"][idx]["id"],
            tol=tol,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(work, enumerate(polys)))
    else:
        trees = [work(x) for x in enumerate(polys)]

    mc_samples = settings.get("mc_samples", 100_000)
    seed = settings.get("seed", 0)
    if not quiet:
        _print_coverage_table(trees, polys, n_s, mc_samples, seed)

    out = {
        "dim": bundle["dim"],
        "settings": settings,
        "devices": [_tree_dict(t) for t in trees],
    }
    _dump_json(Path(output), out)
    return out


def _print_coverage_table(trees, polys, n_s, mc_samples, seed):
    ids = [t.device_id for t in trees]
    shown = ids[:8]
    print("cumulative coverage by stage")
    print("stage  " + "  ".join(f"{i:>8}" for i in shown) + ("  ..." if len(ids) > 8 else ""))
    for s in range(n_s + 1):
        row = []
        for k, (tree, poly) in enumerate(zip(trees, polys)):
            if k >= len(shown):
                break
            if poly.dim == 2:
                cov = coverage_ratio(tree, poly, "exact2d", upto_stage=s)
            else:
                cov = coverage_ratio(
                    tree, poly, "montecarlo", n_samples=mc_samples, seed=seed + k, upto_stage=s
                )
            row.append(cov)
        print(f"{s:>5}  " + "  ".join(f"{v:8.3f}" for v in row))


def _tree_dict(tree: DecompositionTree) -> dict:
    return {
        "id": tree.device_id,
        "dim": tree.dim,
        "settings": tree.settings,
        "attempted_solves": tree.attempted_solves,
        "skipped": tree.skipped,
        "nodes": [
            {
                "stage": n.stage,
                "face_path": list(n.face_path),
                "parent": n.parent,
                "lo": n.box.lo.tolist(),
                "hi": n.box.hi.tolist(),
            }
            for n in tree.nodes
        ],
    }


def _tree_from_dict(d: dict) -> DecompositionTree:
    nodes = [
        TreeNode(
            stage=n["stage"],
            face_path=tuple(n["face_path"]),
            box=AlignedBox(np.array(n["lo"]), np.array(n["hi"])),
            parent=n["parent"],
        )
        for n in d["nodes"]
    ]
    return DecompositionTree(
        device_id=d["id"],
        dim=d["dim"],
        nodes=nodes,
        settings=d.get("settings", {}),
        skipped=d.get("skipped", []),
        attempted_solves=d.get("attempted_solves", 0),
    )


def cmd_aggregate(
    tree_bundle_path: str,
    build_bundle_path: str,
    output: str,
    metrics_output: str,
    tol: Tolerances,
    policy: str | None = None,
    timings: bool = False,
) -> dict:
    """Form aggregate boxes, optionally hull them (2D), and report accuracy."""
    tree_bundle = _load_bundle(tree_bundle_path)
    build_bundle = _load_bundle(build_bundle_path)
    settings = tree_bundle["settings"]
    policy = policy or settings.get("candidate_policy", "stage01-faces")
    trees = [_tree_from_dict(d) for d in tree_bundle["devices"]]
    polys = _bundle_polytopes(build_bundle)
    dim = tree_bundle["dim"]
    seed = settings.get("seed", 0)
    mc_samples = settings.get("mc_samples", 100_000)

    started = time.perf_counter()
    selection = select_candidates(trees, policy)
    approx = union_msum(trees, selection)
    if dim == 2:
        hull_of_boxes_2d(approx)
        truth = exact_fleet_msum_2d(polys) if len(polys) <= FLEET_ORACLE_LIMIT else None
        report = accuracy_report(approx, truth) if truth is not None else None
    else:
        # Ground truth by MC over a small random subfleet.
        rng = np.random.default_rng(seed)
        size = min(SUBFLEET_SIZE, len(polys))
        chosen = sorted(rng.choice(len(polys), size=size, replace=False).tolist())
        sub_polys = [polys[i] for i in chosen]
        sub_trees = [trees[i] for i in chosen]
        sub_sel = select_candidates(sub_trees, policy)
        sub_approx = union_msum(sub_trees, sub_sel)
        inner = sub_approx.boxes + random_tuple_boxes(sub_trees, 400, seed=seed + 1)
        truth = minkowski_sum_volume_mc(
            sub_polys, n_samples=max(mc_samples, 1_000_000), seed=seed + 2, inner_boxes=inner, tol=tol
        )
        report = accuracy_report(sub_approx, truth, n_samples=max(mc_samples, 1_000_000), seed=seed + 3)
    elapsed = time.perf_counter() - started

    out = {
        "policy": policy,
        "dim": dim,
        "boxes": [{"lo": b.lo.tolist(), "hi": b.hi.tolist()} for b in approx.boxes],
        "hull": None if approx.hull is None else approx.hull.vertices.tolist(),
        "substitutions": [list(s) for s in approx.substitutions],
        "truth": None if report is None else report.truth,
    }
    _dump_json(Path(output), out)

    with open(metrics_output, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["policy", "ratio"] + (["runtime_s"] if timings else [])
        writer.writerow(header)
        if report is not None:
            for name, ratio in report.rows():
                row = [name, f"{ratio:.6f}"] + ([f"{elapsed:.3f}"] if timings else [])
                writer.writerow(row)
    return out


def cmd_plot(input_path: str, output: str, build_bundle_path: str | None = None) -> None:
    """Render an approximation file or a 2D build bundle as SVG."""
    data = _load_bundle(input_path)
    polygons = []
    boxes = []
    if "boxes" in data:  # aggregate approximation file
        if data.get("dim") != 2:
            raise ScenarioError("plotting requires 2D geometry")
        if build_bundle_path:
            bundle = _load_bundle(build_bundle_path)
            polys = _bundle_polytopes(bundle)
            if len(polys) <= FLEET_ORACLE_LIMIT:
                polygons.append(("exact aggregate", exact_fleet_msum_2d(polys)))
        if data.get("hull"):
            polygons.append(("hull", VPolygon(np.array(data["hull"]))))
        for i, b in enumerate(data["boxes"]):
            boxes.append((f"box {i}", AlignedBox(np.array(b["lo"]), np.array(b["hi"]))))
    elif "devices" in data:  # build bundle
        if data.get("dim") != 2:
            raise ScenarioError("plotting requires 2D geometry")
        for dev in data["devices"]:
            poly = HPolytope.trusted(np.array(dev["A"]), np.array(dev["b"]))
            polygons.append((dev["id"], vertex_enum_2d(poly)))
    else:
        raise ScenarioError("unrecognized plot input (need a bundle or approximation file)")
    render_svg(output, polygons=polygons, boxes=boxes)


def cmd_validate(scenario_path: str, tol: Tolerances, threads: int = 1) -> bool:
    """Run the end-to-end invariant checks on a scenario; True when all hold."""
    import tempfile

    checks: list[tuple[str, bool]] = []
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        bundle = cmd_build(scenario_path, tmp / "build.json", tol)
        tree_out = cmd_decompose(tmp / "build.json", tmp / "trees.json", tol, threads=threads, quiet=True)
        trees = [_tree_from_dict(d) for d in tree_out["devices"]]
        polys = _bundle_polytopes(bundle)

        contained = True
        monotone = True
        for tree, poly in zip(trees, polys):
            Ap, Am = np.maximum(poly.A, 0), np.maximum(-poly.A, 0)
            for node in tree.nodes:
                if not ((Ap @ node.box.hi - Am @ node.box.lo) <= poly.b + 1e-7).all():
                    contained = False
                if node.parent is not None:
                    if node.box.volume > tree.nodes[node.parent].box.volume * (1 + 1e-9):
                        monotone = False
        checks.append(("boxes contained in device polytopes", contained))
        checks.append(("child box volume <= parent box volume", monotone))

        policy = bundle["settings"].get("candidate_policy", "stage01-faces")
        selection = select_candidates(trees, policy)
        approx = union_msum(trees, selection)
        if bundle["dim"] == 2 and len(polys) <= FLEET_ORACLE_LIMIT:
            truth = exact_fleet_msum_2d(polys)
            hull = hull_of_boxes_2d(approx)
            corner_ok = all(
                truth.contains(c, 1e-7) for box in approx.boxes for c in box.corners()
            )
            hull_ok = all(truth.contains(v, 1e-7) for v in hull.vertices)
            checks.append(("aggregate box corners inside exact sum", corner_ok))
            checks.append(("hull vertices inside exact sum", hull_ok))
            report = accuracy_report(approx, truth)
            checks.append(
                ("policy tiers ordered", report.stage0_ratio <= report.union_ratio + 1e-12
                 and report.union_ratio <= (report.hull_ratio or 1.0) + 1e-12)
            )

    all_ok = all(ok for _, ok in checks)
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all_ok


# ------------------------------------------------------------------ arg parsing


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--tolerance-profile", choices=sorted(PROFILES), default="default")
    p.add_argument("--threads", type=int, default=1)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flexsum", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="realize scenario devices into an H-rep bundle")
    p.add_argument("scenario")
    p.add_argument("-o", "--output", required=True)
    _add_common(p)

    p = sub.add_parser("decompose", help="run the box decomposition per device")
    p.add_argument("bundle")
    p.add_argument("-o", "--output", required=True)
    _add_common(p)

    p = sub.add_parser("aggregate", help="sum candidate boxes and score accuracy")
    p.add_argument("trees")
    p.add_argument("bundle")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("-m", "--metrics", required=True, help="CSV metrics path")
    p.add_argument("--policy", default=None)
    p.add_argument("--timings", action="store_true", help="append wall-clock columns to the CSV")
    _add_common(p)

    p = sub.add_parser("plot", help="render bundles or approximations as SVG")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--bundle", default=None, help="overlay the exact aggregate of this build bundle")
    _add_common(p)

    p = sub.add_parser("validate", help="run invariant checks on a scenario")
    p.add_argument("scenario")
    _add_common(p)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    tol = PROFILES[getattr(args, "tolerance_profile", "default")]
    try:
        if args.command == "build":
            cmd_build(args.scenario, args.output, tol, seed=args.seed)
        elif args.command == "decompose":
            cmd_decompose(args.bundle, args.output, tol, threads=args.threads)
        elif args.command == "aggregate":
            cmd_aggregate(
                args.trees,
                args.bundle,
                args.output,
                args.metrics,
                tol,
                policy=args.policy,
                timings=args.timings,
            )
        elif args.command == "plot":
            cmd_plot(args.input, args.output, build_bundle_path=args.bundle)
        elif args.command == "validate":
            if not cmd_validate(args.scenario, tol, threads=args.threads):
                return 1
    except ScenarioError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleModelError as exc:
        print(f"infeasible model: {exc}", file=sys.stderr)
        return 3
    except (LPNumericalError,) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except FlexsumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
