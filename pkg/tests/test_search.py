import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import trusstopo.search as search
from trusstopo import (
    LowerConfig,
    NoveltyArchive,
    Particle,
    SearchParams,
    Topology,
    enumerate_topologies,
    flip_positions,
    is_feasible,
    novelty,
    run_nbpso,
    top_k_distinct,
    transfer,
    update_velocity,
)
from trusstopo.search import EvaluatedDesign, LowerMemo

from oracles import hamming_knn_mean

T = Topology.from_string


# -- novelty -----------------------------------------------------------------------


def test_novelty_self_is_zero():
    assert novelty(T("101"), [T("101")], k=3) == 0.0


def test_novelty_hand_case():
    arch = [T("000"), T("011"), T("101"), T("110")]
    # the query's own entry is skipped: (2 + 2 + 2) / 3
    assert novelty(T("000"), arch, k=3) == 2.0
    assert novelty(T("000"), arch, k=3, exclude_self=False) == pytest.approx(4 / 3)
    assert novelty(T("111"), arch, k=3) == 1.0


def test_novelty_hand_case_without_self():
    arch = [T("011"), T("101"), T("110")]
    assert novelty(T("000"), arch, k=3) == 2.0


def test_novelty_undersized_archive():
    assert novelty(T("000"), [T("111")], k=3) == 3.0


def test_novelty_empty_archive():
    with pytest.raises(ValueError):
        novelty(T("0"), [], k=3)
    with pytest.raises(ValueError):
        novelty(T("0"), NoveltyArchive(1), k=3)


bitstrings = st.lists(st.booleans(), min_size=6, max_size=6)


@settings(max_examples=200)
@given(bitstrings, st.lists(bitstrings, min_size=1, max_size=12), st.integers(1, 5))
def test_novelty_matches_reference_and_shrinks(x, entries, k):
    arch = NoveltyArchive(6)
    for e in entries:
        arch.add(Topology.from_array(e))
    rows = [tuple(r) for r in arch.matrix]
    got = novelty(Topology.from_array(x), arch, k, exclude_self=False)
    assert got == pytest.approx(hamming_knn_mean(tuple(x), rows, k))
    assert got >= 0
    others = [r for r in rows if r != tuple(x)]
    if others:
        assert novelty(Topology.from_array(x), arch, k) == pytest.approx(hamming_knn_mean(tuple(x), others, k))
    if len(arch) >= k:
        arch.add(Topology.from_array(x))
        assert novelty(Topology.from_array(x), arch, k, exclude_self=False) <= got


def test_archive_dedup_and_order():
    arch = NoveltyArchive(3)
    assert arch.add(T("101"), 0)
    assert not arch.add(T("101"), 4)
    assert arch.add(T("000"), 2)
    assert len(arch) == 2 and T("000") in arch
    assert [x.to_string() for x in arch] == ["101", "000"]
    assert arch.first_seen == [0, 2]
    with pytest.raises(ValueError):
        arch.add(T("1"), 0)


def test_archive_grows_past_initial_capacity():
    arch = NoveltyArchive(8)
    for v in range(256):
        arch.add(Topology.from_int(v, 8), v)
    assert len(arch) == 256
    assert len({r.tobytes() for r in arch.matrix}) == 256


# -- transfer and position update ------------------------------------------------------


def test_transfer_values():
    assert transfer(0.0, 3.0) == 0.5
    assert transfer(5.0, 5.0) == pytest.approx(1 / (1 + math.exp(-1)), rel=1e-12)
    with pytest.raises(ValueError):
        transfer(1.0, 0.0)


@settings(max_examples=200)
@given(st.floats(-50, 50), st.floats(0.1, 10))
def test_transfer_identities(v, phi):
    assert transfer(-v, phi) == pytest.approx(1 - transfer(v, phi), abs=1e-12)
    assert 0.0 <= transfer(v, phi) <= 1.0
    assert transfer(v + 0.5, phi) >= transfer(v, phi)


def test_transfer_strictly_increasing():
    v = np.linspace(-6, 6, 101)
    assert np.all(np.diff(transfer(v, 2.0)) > 0)


def test_flip_frequency_zero_velocity(rng):
    bits = flip_positions(np.zeros(10_000), 2.0, rng)
    assert np.mean(bits.array) == pytest.approx(0.5, abs=0.02)


def test_flip_frequency_printed_rule(rng):
    bits = flip_positions(np.full(20_000, -6.0), 1.0, rng)
    assert np.mean(bits.array) == pytest.approx(1 - transfer(-6.0, 1.0), abs=0.005)


def test_flip_large_velocity_gives_zero(rng):
    assert flip_positions(np.full(100, 1e4), 1.0, rng).array.sum() == 0


def test_flip_conventional_rule(rng):
    bits = flip_positions(np.full(20_000, 2.0), 1.0, rng, rule="conventional")
    assert np.mean(bits.array) == pytest.approx(transfer(2.0, 1.0), abs=0.01)
    with pytest.raises(ValueError):
        flip_positions(np.zeros(3), 1.0, rng, rule="other")


def _particle(z, p, v):
    return Particle(T(z), np.asarray(v, dtype=float), T(p))


def test_velocity_vanishes_without_attraction(rng):
    p = _particle("1010", "1010", [3.0, -2.0, 1.0, 5.0])
    assert np.array_equal(update_velocity(p, T("1010"), 0.0, 1.0, 1.0, rng), np.zeros(4))


def test_velocity_clamp_idempotent(rng):
    p = _particle("11", "11", [6.0, -6.0])
    assert np.array_equal(update_velocity(p, T("11"), 1.0, 1.0, 1.0, rng, vmax=6.0), [6.0, -6.0])


def test_velocity_interval(rng):
    for _ in range(500):
        v = update_velocity(_particle("0", "1", [0.0]), T("1"), 0.0, 1.0, 1.0, rng)
        assert 0.0 <= v[0] <= 2.0


@settings(max_examples=200)
@given(bitstrings, bitstrings, bitstrings, st.lists(st.floats(-6, 6), min_size=6, max_size=6),
       st.floats(0, 1.5), st.integers(0, 2**32 - 1))
def test_velocity_always_clamped(z, p, g, v, omega, seed):
    part = Particle(Topology.from_array(z), np.array(v), Topology.from_array(p))
    out = update_velocity(part, Topology.from_array(g), omega, 2.0, 2.0, np.random.default_rng(seed), vmax=6.0)
    assert np.all(np.abs(out) <= 6.0)


# -- parameters ------------------------------------------------------------------------


def test_schedules():
    p = SearchParams()
    assert p.omega(1) == pytest.approx(0.9) and p.omega(300) == pytest.approx(0.4)
    assert p.phi(1) == pytest.approx(5.0) and p.phi(300) == pytest.approx(1.0)
    assert p.phi(150) > p.phi(151)


def test_params_roundtrip_and_validation():
    p = SearchParams(iterations=7, lower=LowerConfig(max_evals=300))
    assert SearchParams.from_dict(p.to_dict()) == p
    with pytest.raises(ValueError):
        SearchParams.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        SearchParams.from_dict({"lower": {"bogus": 1}})
    with pytest.raises(ValueError):
        SearchParams(vmax=0)
    with pytest.raises(ValueError):
        SearchParams(flip_rule="x")


# -- enumeration -------------------------------------------------------------------------


def test_enumerate_order_and_guard(ten, fiftytwo):
    designs = enumerate_topologies(ten, runs_per_topology=0)
    assert [d.topology.to_int() for d in designs] == list(range(1024))
    assert all(d.upper_feasible == is_feasible(ten, d.topology) for d in designs)
    with pytest.raises(ValueError):
        enumerate_topologies(load_big(), runs_per_topology=0)


def load_big():
    from trusstopo import load_benchmark

    return load_benchmark("seventytwo_bar")


def test_enumerate_calls_lower_only_when_feasible(twentyfive, monkeypatch):
    calls = []
    real = search.optimize_sizing

    def spy(inst, x, cfg=None, rng=None):
        assert is_feasible(inst, x)
        calls.append(x)
        return real(inst, x, LowerConfig(max_evals=60), rng)

    monkeypatch.setattr(search, "optimize_sizing", spy)
    designs = enumerate_topologies(twentyfive, runs_per_topology=3)
    assert len(designs) == 256
    assert len(calls) == 3 * sum(d.upper_feasible for d in designs)
    for d in designs:
        if d.weight is not None:
            assert d.sizing.weight == d.weight
            assert len(d.run_weights) == 3


# -- swarm -------------------------------------------------------------------------------


SMALL = SearchParams(swarm_size=8, iterations=6, lower=LowerConfig(max_evals=150))


def test_swarm_invariants(seventytwo):
    res = run_nbpso(seventytwo, SMALL)
    assert len(res.designs) == 8 * 7
    for d in res.designs:
        assert is_feasible(seventytwo, d.topology)
        assert set(d.topology.bits) <= {0, 1}
    # archive bound and monotone growth
    by_iter = {}
    for t in res.archive.first_seen:
        by_iter[t] = by_iter.get(t, 0) + 1
    total = 0
    for t in range(7):
        total += by_iter.get(t, 0)
        assert total <= 8 * (t + 1)
    assert len({x.bits for x in res.archive}) == len(res.archive)
    assert res.archive.first_seen == sorted(res.archive.first_seen)


def test_swarm_deterministic(ten):
    a = run_nbpso(ten, SMALL)
    b = run_nbpso(ten, SMALL)
    assert [(d.topology, d.novelty, d.weight) for d in a.designs] == [(d.topology, d.novelty, d.weight) for d in b.designs]


def test_memo_shared_and_sound(ten):
    memo = LowerMemo(ten, SMALL.lower)
    run_nbpso(ten, SMALL, memo=memo)
    first = dict(memo.table)
    res = run_nbpso(ten, SearchParams(**{**SMALL.__dict__, "seed": 5}), memo=memo)
    for key, sol in first.items():
        assert memo.table[key] is sol
    fresh = LowerMemo(ten, SMALL.lower)
    for d in res.designs[:10]:
        again = fresh(d.topology)
        assert np.array_equal(np.nan_to_num(again.y), np.nan_to_num(d.sizing.y))
        assert again.weight == d.sizing.weight
    with pytest.raises(ValueError):
        run_nbpso(ten, SMALL, memo=LowerMemo(ten, LowerConfig(max_evals=99)))


def test_repair_failures_rerandomize(ten, monkeypatch):
    real = search.repair
    state = {"n": 0}

    def flaky(inst, x, rng, budget):
        state["n"] += 1
        if state["n"] % 3 == 0:
            raise search.RepairFailure("budget")
        return real(inst, x, rng, budget)

    monkeypatch.setattr(search, "repair", flaky)
    res = run_nbpso(ten, SearchParams(swarm_size=4, iterations=3, lower=LowerConfig(max_evals=100)))
    assert res.repair_failures > 0
    assert all(is_feasible(ten, d.topology) for d in res.designs)


# -- top-k -------------------------------------------------------------------------------


def _d(bits, w):
    return EvaluatedDesign(T(bits), True, None, w)


def test_top_k_distinct():
    res = [_d("11", 5.0), _d("11", 4.0), _d("10", 6.0), _d("01", None), _d("01", 7.0)]
    top = top_k_distinct(res, 3)
    assert [(d.topology.to_string(), d.weight) for d in top] == [("11", 4.0), ("10", 6.0), ("01", 7.0)]
    assert top_k_distinct(res, 1)[0].weight == 4.0


def test_top_k_degenerate_warns():
    with pytest.warns(UserWarning):
        top = top_k_distinct([_d("11", 2.0), _d("11", 1.0)], 3)
    assert len(top) == 1
    with pytest.raises(ValueError):
        top_k_distinct([], 3)
