"""Acceptance criteria, one verdict line each (see the terminal summary).

Slow: the enumerations and the 10-seed swarm runs take tens of minutes on a
single core.  ``TRUSSTOPO_RUNS`` lowers the sizing runs per topology for a
smoke pass (default 30).
"""

import json
import os
import time

import numpy as np
import pytest

from trusstopo import (
    BENCHMARKS,
    LowerConfig,
    SearchParams,
    Topology,
    analyze,
    feasible_census,
    flip_positions,
    is_feasible,
    load_benchmark,
    novelty,
    optimize_sizing,
    repair,
    run_nbpso,
    transfer,
    weight,
)
from trusstopo.cli import main
from trusstopo.instance import instance_from_dict, instance_to_dict
from trusstopo.results import parse_areas, read_table
import trusstopo.search as search

from conftest import ACCEPTANCE_LINES, axial_bar, three_bar, two_bar
from oracles import brute_force_sizing

pytestmark = pytest.mark.slow

RUNS = int(os.environ.get("TRUSSTOPO_RUNS", "30"))
SEEDS = list(range(10))


def verdict(tag, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
    return ok


def _rel(a, b):
    return abs(a - b) / abs(b)


# -- shared CLI runs -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


_landscapes = {}


def landscape(name, outdir):
    if name not in _landscapes:
        out = outdir / f"enum_{name}"
        assert main(["enumerate", "--instance", name, "--out", str(out), "--runs", str(RUNS), "--quiet"]) == 0
        meta, rows = read_table(out / "landscape.csv")
        _landscapes[name] = (out, rows)
    return _landscapes[name]


_swarms = {}


def swarm(name, outdir):
    if name not in _swarms:
        out = outdir / f"nbpso_{name}"
        seeds = ",".join(map(str, SEEDS))
        assert main(["optimize", "--instance", name, "--seeds", seeds, "--out", str(out)]) == 0
        _swarms[name] = out
    return _swarms[name]


def _best_row(rows):
    feas = [r for r in rows if r["median_weight"]]
    return min(feas, key=lambda r: float(r["median_weight"]))


# -- 1. finite element oracles ----------------------------------------------------------------


def test_c1_fem_oracles():
    t0 = time.perf_counter()
    worst = {}
    bar = axial_bar()
    res = analyze(bar, "1", [2.0])
    worst["bar_disp"] = _rel(res.displacements[1, 0], 10.0 * 120.0 / (3.0e4 * 2.0))
    worst["bar_stress"] = _rel(res.stresses[0], 10.0 / 2.0)

    tri = two_bar()
    apex = np.array([1.0, 3.0])
    e = np.array([[0.0, 0.0] - apex, [4.0, 0.0] - apex]).T
    e /= np.linalg.norm(e, axis=0)
    n = np.linalg.solve(e, -np.array(tri.load_cases[0].forces[3]))
    areas = np.array([0.7, 1.9])
    res = analyze(tri, "11", areas)
    worst["triangle"] = float(np.max(np.abs(res.stresses - n / areas) / np.abs(n / areas)))

    eq = 0.0
    for name in BENCHMARKS:
        inst = load_benchmark(name)
        y = np.full(inst.m, inst.size_array[len(inst.size_array) // 2])
        for lc in range(len(inst.load_cases)):
            r = analyze(inst, Topology.full(inst.m), y, lc)
            applied = inst.loads[lc].sum(axis=0)
            reac = np.zeros(inst.dimension)
            for (_, axis), v in r.reactions.items():
                reac[axis] += v
            eq = max(eq, np.abs(applied + reac).max() / np.abs(applied).max())
    worst["equilibrium"] = eq
    dt = time.perf_counter() - t0
    ok = (worst["bar_disp"] < 1e-10 and worst["bar_stress"] < 1e-10 and worst["triangle"] < 1e-8
          and eq < 1e-8 and dt < 1.0)
    verdict("C1 FEM oracles", ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {dt:.2f} s")
    assert ok


# -- 2. brute-force equivalence ------------------------------------------------------------------


def _recatalogue(name, sizes):
    doc = instance_to_dict(load_benchmark(name))
    doc["size_set"] = sizes
    return instance_from_dict(doc, name=f"{name}_subset")


def test_c2_bruteforce_equivalence():
    toys = [
        ("three-bar, 8000 combos", three_bar(), "111"),
        ("ten-bar subset, 4096 combos", _recatalogue("ten_bar", [5.74, 15.5, 22.9, 33.5]), "1011001110"),
        ("25-bar subset, 6561 combos", _recatalogue("twentyfive_bar_case1", [0.4, 1.6, 3.4]), "11111111"),
        ("two-bar, 400 combos", two_bar(disp=0.05), "11"),
    ]
    parts, ok = [], True
    for label, inst, x in toys:
        best, _ = brute_force_sizing(inst, x)
        hits = sum(
            optimize_sizing(inst, x, LowerConfig(seed=s)).weight <= best * (1 + 1e-12) for s in range(100)
        )
        ok &= hits >= 95
        parts.append(f"{label}: {hits}/100")
    verdict("C2 sizing vs exhaustive optimum", ok, "; ".join(parts))
    assert ok


# -- 3. 25-bar enumeration ----------------------------------------------------------------------------


def test_c3_twentyfive_bar_enumeration(outdir):
    targets = {"twentyfive_bar_case1": (482.6, 2), "twentyfive_bar_case2": (546.97, 3)}
    parts, ok = [], True
    for name, (target, dmax) in targets.items():
        _, rows = landscape(name, outdir)
        best = _best_row(rows)
        w = float(best["median_weight"])
        good = len(rows) == 256 and _rel(w, target) <= 0.015 and int(best["d_hamming"]) <= dmax
        ok &= good
        parts.append(f"{name} rows={len(rows)} best median {w:.2f} vs {target} ({100 * (w - target) / target:+.2f}%) "
                     f"at d_H={best['d_hamming']} (need <= {dmax})")
    verdict("C3 25-bar enumeration", ok, "; ".join(parts))
    assert ok


# -- 4. 10-bar enumeration -------------------------------------------------------------------------------


def test_c4_ten_bar_enumeration(outdir):
    _, rows = landscape("ten_bar", outdir)
    far = [r for r in rows if int(r["d_hamming"]) > 4 and r["feasible"] == "1"]
    best = _best_row(rows)
    w = float(best["median_weight"])
    ok = len(rows) == 1024 and not far and _rel(w, 4965.70) <= 0.015
    verdict("C4 10-bar enumeration", ok,
            f"rows={len(rows)}, feasible beyond d_H 4: {len(far)}, best median {w:.2f} vs 4965.70 "
            f"({100 * (w - 4965.70) / 4965.70:+.2f}%) bits={best['bits']}")
    assert ok


# -- 5. 52-bar census -----------------------------------------------------------------------------------


def test_c5_fiftytwo_bar_census(outdir):
    out = outdir / "enum_fiftytwo_census"
    assert main(["enumerate", "--instance", "fiftytwo_bar", "--out", str(out), "--runs", "0", "--quiet"]) == 0
    _, rows = read_table(out / "landscape.csv")
    feas = [r for r in rows if r["feasible"] == "1"]
    dmax = max(int(r["d_hamming"]) for r in feas)
    count_ok = abs(len(feas) - 1900) <= 0.05 * 1900
    ok = len(rows) == 4096 and dmax <= 6 and count_ok
    verdict("C5 52-bar census", ok,
            f"rows={len(rows)}, feasible={len(feas)} (target 1900 +/- 5%: {'ok' if count_ok else 'miss'}), "
            f"max feasible d_H={dmax} (need <= 6)")
    assert ok


# -- 6. swarm end to end ------------------------------------------------------------------------------------


SWARM_TARGETS = {
    "ten_bar": (5490.74, 4965.70),
    "fiftytwo_bar": (1902.61, 1862.0),
    "fifteen_bar": (105.74, 89.899),
    "seventytwo_bar": (385.54, 368.16),
}


def _swarm_best(out):
    best = np.inf
    for seed in SEEDS:
        _, rows = read_table(out / f"seed_{seed}" / "swarm.csv")
        ws = [float(r["weight"]) for r in rows if r["weight"]]
        best = min(best, min(ws, default=np.inf))
    return best


@pytest.mark.parametrize("name", list(SWARM_TARGETS))
def test_c6_swarm_end_to_end(name, outdir):
    prior, paper = SWARM_TARGETS[name]
    best = _swarm_best(swarm(name, outdir))
    beats = best <= prior
    close = _rel(best, paper) <= 0.02
    if beats and close:
        status = "within 2% of the published best"
    elif beats:
        status = "2% target missed, prior best beaten: property suites (C7) gate this instance"
    else:
        status = "prior best not beaten"
    verdict(f"C6 swarm {name}", beats,
            f"best {best:.3f} over {len(SEEDS)} seeds; prior {prior}, published {paper} "
            f"({100 * (best - paper) / paper:+.2f}%): {status}")
    assert beats


# -- 7. property suites -----------------------------------------------------------------------------------------


def test_c7_property_suites(outdir, monkeypatch):
    checks = {}
    ten = load_benchmark("ten_bar")
    rng = np.random.default_rng(2024)
    fails = starts = 0
    while starts < 1000:
        x = Topology.from_array(rng.random(10) < 0.5)
        if is_feasible(ten, x):
            continue
        starts += 1
        fails += not is_feasible(ten, repair(ten, x, rng))
    checks["repair 1000 infeasible starts"] = fails == 0

    seen_v = []
    real_update = search.update_velocity

    def spy(*a, **k):
        v = real_update(*a, **k)
        seen_v.append(v)
        return v

    monkeypatch.setattr(search, "update_velocity", spy)
    inst = load_benchmark("seventytwo_bar")
    params = SearchParams(swarm_size=10, iterations=8, lower=LowerConfig(max_evals=200))
    res = run_nbpso(inst, params)
    monkeypatch.undo()
    checks["positions binary and feasible"] = all(
        set(d.topology.bits) <= {0, 1} and is_feasible(inst, d.topology) for d in res.designs
    )
    checks["velocities clamped"] = bool(seen_v) and all(np.all(np.abs(v) <= params.vmax) for v in seen_v)
    rows = res.archive.matrix
    checks["archive duplicate-free, monotone"] = (
        len({r.tobytes() for r in rows}) == len(rows) and res.archive.first_seen == sorted(res.archive.first_seen)
    )
    v = np.linspace(-20, 20, 401)
    checks["transfer identities"] = (
        transfer(0.0, 3.0) == 0.5
        and abs(transfer(5.0, 5.0) - 1 / (1 + np.exp(-1))) < 1e-12
        and np.allclose(transfer(-v, 2.0), 1 - transfer(v, 2.0))
        and np.all(np.diff(transfer(v, 2.0)) > 0)
    )
    freq = flip_positions(np.zeros(10_000), 1.0, np.random.default_rng(1)).array.mean()
    checks["flip frequency at v=0"] = abs(freq - 0.5) <= 0.02
    T = Topology.from_string
    checks["novelty hand cases"] = (
        novelty(T("101"), [T("101")]) == 0.0
        and novelty(T("000"), [T("000"), T("011"), T("101"), T("110")]) == 2.0
        and novelty(T("000"), [T("111")]) == 3.0
    )
    a, b = outdir / "det_a", outdir / "det_b"
    pfile = outdir / "det_params.json"
    pfile.write_text(json.dumps({"swarm_size": 8, "iterations": 10, "lower": {"max_evals": 300}}))
    for d in (a, b):
        assert main(["optimize", "--instance", "fiftytwo_bar", "--params", str(pfile), "--seeds", "7",
                     "--out", str(d)]) == 0
    checks["bit-identical replay"] = all(
        (a / "seed_7" / f).read_bytes() == (b / "seed_7" / f).read_bytes()
        for f in ("swarm.csv", "designs.csv", "archive.csv")
    )
    ok = all(checks.values())
    verdict("C7 property suites", ok, ", ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in checks.items()))
    assert ok


# -- 8. weights re-derivable ---------------------------------------------------------------------------------------


def test_c8_weights_rederivable(outdir):
    landscape("ten_bar", outdir)
    swarm("ten_bar", outdir)
    checked, worst, problems = 0, 0.0, []
    for csv_path in sorted(outdir.rglob("*.csv")):
        if csv_path.name == "archive.csv":
            continue
        meta, rows = read_table(csv_path)
        inst = load_benchmark(meta["instance"])
        designs = csv_path.with_name("designs.csv")
        _, drows = read_table(designs)
        areas = {r["bits"]: parse_areas(r["areas"], inst.m) for r in drows}
        column = {"landscape.csv": "median_weight", "swarm.csv": "weight", "designs.csv": "weight"}[csv_path.name]
        for r in rows:
            if not r[column]:
                continue
            if r["bits"] not in areas:
                problems.append(f"{csv_path.name}:{r['bits']} has no areas")
                continue
            w = weight(inst, Topology.from_string(r["bits"]), areas[r["bits"]])
            worst = max(worst, _rel(float(r[column]), w))
            checked += 1
    ok = checked > 0 and worst <= 1e-9 and not problems
    verdict("C8 weight cross-check", ok, f"{checked} reported weights, worst relative gap {worst:.1e}"
            + (f", {len(problems)} missing" if problems else ""))
    assert ok
