"""Benchmark command line: ``enumerate``, ``optimize`` and ``analyze``.

Exit codes: 0 success, 2 invalid input, 3 file-system error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import results
from .analysis import analyze, evaluate_constraints, weight
from .instance import BENCHMARKS, Instance, InstanceError, Topology, load_benchmark, load_instance
from .search import (
    EvaluatedDesign,
    LowerMemo,
    SearchParams,
    enumerate_topologies,
    run_nbpso,
    top_k_distinct,
)
from .sizing import LowerConfig

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3


@dataclass
class RunRecord:
    instance: str
    instance_sha256: str
    mode: str
    seed: int
    params: dict
    wall_time: float
    n_designs: int
    outputs: list[str] = field(default_factory=list)


def open_instance(ref: str) -> Instance:
    """A benchmark name or a path to an instance document."""
    if ref in BENCHMARKS and not Path(ref).exists():
        return load_benchmark(ref)
    return load_instance(ref)


def _read_params(path: str | None) -> dict:
    if path is None:
        return {}
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError("params file must hold a JSON object")
    return doc


def _save_record(out: Path, rec: RunRecord) -> None:
    (out / "run.json").write_text(json.dumps(asdict(rec), indent=2, sort_keys=True) + "\n")


def describe(inst: Instance, d: EvaluatedDesign) -> str:
    removed = sorted(mid for g in d.removed_groups() for mid in inst.groups[g])
    text = f"W={d.weight:.6g}  bits={d.topology}  d_H={d.d_hamming}"
    return text + (f"  removed members {removed}" if removed else "  (full structure)")


def _print_top(inst: Instance, designs, k: int = 3) -> None:
    top = top_k_distinct(designs, k)
    for label, d in zip("abcdefghij", top):
        print(f"  ({label}) {describe(inst, d)}")


def cmd_enumerate(args) -> int:
    inst = open_instance(args.instance)
    extra = _read_params(args.params)
    lower = LowerConfig(**extra.get("lower", {}))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(i, total):
        if not args.quiet and (i % 256 == 0 or i == total):
            print(f"  {i}/{total} topologies", file=sys.stderr)

    t0 = time.perf_counter()
    designs = enumerate_topologies(
        inst, lower, runs_per_topology=args.runs, seed=args.seed, force=args.force, progress=progress
    )
    wall = time.perf_counter() - t0
    params = {"runs_per_topology": args.runs, "lower": asdict(lower)}
    meta = {"instance": inst.name, "instance_sha256": inst.source_hash, "mode": "enumerate",
            "seed": args.seed, "params": params}
    files = [
        results.write_landscape(out / "landscape.csv", designs, meta),
        results.write_designs(out / "designs.csv", designs, meta),
    ]
    _save_record(out, RunRecord(inst.name, inst.source_hash, "enumerate", args.seed, params, wall,
                                len(designs), [f.name for f in files]))
    n_upper = sum(d.upper_feasible for d in designs)
    print(f"{inst.name}: {len(designs)} topologies, {n_upper} upper-level feasible ({wall:.1f} s)")
    if any(d.feasible for d in designs):
        _print_top(inst, designs)
    return EXIT_OK


def cmd_optimize(args) -> int:
    inst = open_instance(args.instance)
    doc = _read_params(args.params)
    doc.pop("seed", None)
    base = SearchParams.from_dict(doc)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not seeds:
        raise ValueError("--seeds needs at least one integer")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "params.json").write_text(json.dumps(base.to_dict(), indent=2, sort_keys=True) + "\n")
    memo = LowerMemo(inst, base.lower)
    everything = []
    for seed in seeds:
        params = SearchParams.from_dict({**base.to_dict(), "seed": seed})
        t0 = time.perf_counter()
        res = run_nbpso(inst, params, memo=memo)
        wall = time.perf_counter() - t0
        meta = {"instance": inst.name, "instance_sha256": inst.source_hash, "mode": "nbpso",
                "seed": seed, "params": params.to_dict()}
        d = out / f"seed_{seed}"
        d.mkdir(exist_ok=True)
        files = [
            results.write_swarm(d / "swarm.csv", res.designs, meta),
            results.write_designs(d / "designs.csv", res.designs, meta),
            results.write_archive(d / "archive.csv", res.archive, meta),
        ]
        _save_record(d, RunRecord(inst.name, inst.source_hash, "nbpso", seed, params.to_dict(), wall,
                                  len(res.designs), [f.name for f in files]))
        best = min((x.weight for x in res.designs if x.feasible), default=None)
        best_txt = "none feasible" if best is None else f"best W={best:.6g}"
        print(f"seed {seed}: {len(res.archive)} topologies visited, {best_txt} ({wall:.1f} s)")
        everything.extend(res.designs)
    if any(x.feasible for x in everything):
        print("top designs over all seeds:")
        _print_top(inst, everything)
    return EXIT_OK


def _parse_areas(text: str, inst: Instance, x: Topology) -> np.ndarray:
    vals = [v.strip() for v in text.split(",")]
    nums = np.array([np.nan if v in ("", "nan", "-") else float(v) for v in vals])
    active = np.flatnonzero(x.array)
    if len(nums) == inst.m:
        return nums
    if len(nums) == len(active):
        y = np.full(inst.m, np.nan)
        y[active] = nums
        return y
    if len(nums) == 1:
        return np.where(x.array, nums[0], np.nan)
    raise ValueError(f"--areas needs {inst.m} values (or {len(active)} for the active groups)")


def cmd_analyze(args) -> int:
    inst = open_instance(args.instance)
    x = Topology.from_string(args.bits) if args.bits else Topology.full(inst.m)
    if len(x) != inst.m:
        raise ValueError(f"--bits has {len(x)} entries, instance has {inst.m} groups")
    y = _parse_areas(args.areas, inst, x)
    rep = evaluate_constraints(inst, x, y)
    print(f"{inst.name}  bits={x}  W={weight(inst, x, y):.10g}")
    if not rep.internally_stable:
        print("internally unstable (mechanism): no stresses or displacements")
        return EXIT_OK
    for k, lc in enumerate(inst.load_cases):
        res = analyze(inst, x, y, k)
        print(f"load case {lc.name or k + 1}:")
        for mid, s in zip(res.member_ids, res.stresses):
            print(f"  member {mid:>4}: stress {s: .6g}")
        for nid, u in zip(res.node_ids, res.displacements):
            print(f"  node {nid:>4}: displacement " + " ".join(f"{c: .6g}" for c in u))
    print(f"max stress ratio {rep.max_stress_ratio:.6f}  max displacement ratio {rep.max_disp_ratio:.6f}")
    print("feasible" if rep.feasible else "infeasible")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trusstopo", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("enumerate", help="evaluate every topology of a small instance")
    e.add_argument("--instance", required=True, help="instance file or benchmark name")
    e.add_argument("--out", required=True, help="output directory")
    e.add_argument("--runs", type=int, default=30, help="sizing runs per topology (0: feasibility only)")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--params", help="JSON file; its 'lower' object configures the sizing runs")
    e.add_argument("--force", action="store_true", help="lift the 12-group guard")
    e.add_argument("--quiet", action="store_true")
    e.set_defaults(func=cmd_enumerate)

    o = sub.add_parser("optimize", help="novelty-driven binary PSO")
    o.add_argument("--instance", required=True)
    o.add_argument("--params", help="JSON file with search parameters")
    o.add_argument("--seeds", default="0", help="comma-separated seeds")
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_optimize)

    a = sub.add_parser("analyze", help="analyse one sized topology")
    a.add_argument("--instance", required=True)
    a.add_argument("--bits", help="topology bit string (default: full structure)")
    a.add_argument("--areas", required=True, help="comma-separated group areas")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
