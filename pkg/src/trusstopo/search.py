"""Upper-level drivers: exhaustive enumeration and novelty-driven binary PSO.

The upper level never looks at structural weight.  Enumeration visits every
bit string; the swarm is steered purely by novelty, the mean Hamming
distance to the nearest previously visited topologies.  Weights are
recorded for reporting only.
"""

from __future__ import annotations

import statistics
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Iterable, Sequence

import numpy as np

from .feasibility import RepairFailure, is_feasible, repair
from .instance import Instance, Topology, as_topology
from .sizing import LowerConfig, SizingSolution, optimize_sizing

FLIP_RULES = ("printed", "conventional")


# -- records ---------------------------------------------------------------------


@dataclass
class EvaluatedDesign:
    """One visited topology and what the lower level made of it.

    ``weight`` is set only when a feasible sizing was found; for enumeration
    it is the median over the per-topology runs and ``sizing`` is the run
    that attained it.  ``iteration``, ``particle`` and ``novelty`` are filled
    in by the swarm driver.
    """

    topology: Topology
    upper_feasible: bool
    sizing: SizingSolution | None = None
    weight: float | None = None
    run_weights: tuple[float, ...] = ()
    iteration: int | None = None
    particle: int | None = None
    novelty: float | None = None

    @property
    def d_hamming(self) -> int:
        return self.topology.hamming_to_full()

    @property
    def feasible(self) -> bool:
        return self.weight is not None

    def removed_groups(self) -> list[int]:
        """Zero-based indices of the inactive groups."""
        return [g for g, b in enumerate(self.topology.bits) if not b]


# -- enumeration -------------------------------------------------------------------


def _median_run(sols: Sequence[SizingSolution]) -> tuple[SizingSolution, float | None]:
    w = [s.weight if s.feasible else np.inf for s in sols]
    med = statistics.median_low(w)
    pick = sols[w.index(med)]
    return pick, (None if np.isinf(med) else float(med))


def enumerate_topologies(
    inst: Instance,
    lower: LowerConfig | None = None,
    runs_per_topology: int = 30,
    seed: int = 0,
    max_bits: int = 12,
    force: bool = False,
    progress=None,
) -> list[EvaluatedDesign]:
    """Visit all ``2**m`` bit strings in ascending integer order.

    Upper-feasible strings get ``runs_per_topology`` independent sizing runs
    (seeds spawned from ``seed`` and the string itself) and the low median
    weight; ``runs_per_topology=0`` only classifies.  ``progress`` is an
    optional callback ``(index, total)``.
    """
    m = inst.m
    if m > max_bits and not force:
        raise ValueError(f"{2**m} topologies exceed the enumeration guard (m={m} > {max_bits}); pass force")
    if runs_per_topology < 0:
        raise ValueError("runs_per_topology must be >= 0")
    lower = lower or LowerConfig()
    out = []
    total = 2**m
    for v in range(total):
        x = Topology.from_int(v, m)
        if not is_feasible(inst, x):
            out.append(EvaluatedDesign(x, False))
        elif runs_per_topology == 0:
            out.append(EvaluatedDesign(x, True))
        else:
            children = np.random.SeedSequence([seed, m, v]).spawn(runs_per_topology)
            sols = [optimize_sizing(inst, x, lower, np.random.default_rng(c)) for c in children]
            pick, med = _median_run(sols)
            ws = tuple(s.weight if s.feasible else np.inf for s in sols)
            out.append(EvaluatedDesign(x, True, pick, med, ws))
        if progress is not None:
            progress(v + 1, total)
    return out


# -- novelty ------------------------------------------------------------------------


class NoveltyArchive:
    """Duplicate-free, insertion-ordered set of visited topologies."""

    def __init__(self, m: int):
        self.m = m
        self._rows = np.zeros((64, m), dtype=bool)
        self._index: dict[bytes, int] = {}
        self.first_seen: list[int] = []

    def __len__(self) -> int:
        return len(self.first_seen)

    def __contains__(self, x) -> bool:
        return _key(x) in self._index

    def __iter__(self):
        for row in self.matrix:
            yield Topology.from_array(row)

    @property
    def matrix(self) -> np.ndarray:
        return self._rows[: len(self)]

    def add(self, x, iteration: int = 0) -> bool:
        """Insert ``x``; returns False if it was already present."""
        arr = _bits(x)
        if arr.size != self.m:
            raise ValueError(f"topology has {arr.size} bits, archive holds {self.m}")
        key = arr.tobytes()
        if key in self._index:
            return False
        n = len(self)
        if n == len(self._rows):
            self._rows = np.concatenate([self._rows, np.zeros_like(self._rows)])
        self._rows[n] = arr
        self._index[key] = n
        self.first_seen.append(iteration)
        return True


def _bits(x) -> np.ndarray:
    if isinstance(x, np.ndarray):
        return x.astype(bool)
    return as_topology(x).array.astype(bool)


def _key(x) -> bytes:
    return _bits(x).tobytes()


def _knn_mean(query: np.ndarray, ref: np.ndarray, k: int) -> float:
    d = np.count_nonzero(ref != query, axis=1)
    if len(d) > k:
        d = np.partition(d, k - 1)[:k]
    return float(d.mean())


def novelty(x, archive, k: int = 3, exclude_self: bool = True) -> float:
    """Mean Hamming distance from ``x`` to its ``k`` nearest archive entries.

    ``archive`` is a :class:`NoveltyArchive` or any sequence of topologies;
    with fewer than ``k`` entries the mean runs over all of them.  An entry
    equal to ``x`` is taken to be ``x``'s own and skipped unless
    ``exclude_self`` is False; an archive holding only ``x`` scores 0.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ref = archive.matrix if isinstance(archive, NoveltyArchive) else np.array([_bits(a) for a in archive])
    if len(ref) == 0:
        raise ValueError("novelty needs a non-empty archive")
    q = _bits(x)
    if exclude_self:
        ref = ref[np.any(ref != q, axis=1)]
        if len(ref) == 0:
            return 0.0
    return _knn_mean(q, ref, k)


# -- binary PSO operators ------------------------------------------------------------


def transfer(v, phi: float):
    """Sigmoid transfer ``1 / (1 + exp(-v / phi))``."""
    if phi <= 0:
        raise ValueError("phi must be positive")
    out = 0.5 * (1.0 + np.tanh(np.asarray(v, dtype=float) / (2.0 * phi)))
    return float(out) if out.ndim == 0 else out


@dataclass
class Particle:
    position: Topology
    velocity: np.ndarray
    best: Topology
    sizing: SizingSolution | None = None


def flip_positions(particle, phi: float, rng: np.random.Generator, rule: str = "printed") -> Topology:
    """Draw a new position from the particle's velocity.

    Under the ``printed`` rule a bit is 1 iff ``u >= transfer(v, phi)``, so a
    large positive velocity drives the bit towards 0.  The ``conventional``
    rule sets the bit to 1 iff ``u < transfer(v, phi)``.
    """
    v = particle.velocity if isinstance(particle, Particle) else np.asarray(particle, dtype=float)
    tv = transfer(np.atleast_1d(v), phi)
    u = rng.random(tv.shape)
    if rule == "printed":
        bits = u >= tv
    elif rule == "conventional":
        bits = u < tv
    else:
        raise ValueError(f"unknown flip rule {rule!r}")
    return Topology.from_array(bits)


def update_velocity(
    particle: Particle,
    global_best,
    omega: float,
    c1: float,
    c2: float,
    rng: np.random.Generator,
    vmax: float = 6.0,
) -> np.ndarray:
    """Inertia plus cognitive and social pulls, clamped to ``[-vmax, vmax]``."""
    z = particle.position.array.astype(float)
    p = particle.best.array.astype(float)
    g = as_topology(global_best).array.astype(float)
    r1 = rng.random(z.shape)
    r2 = rng.random(z.shape)
    v = omega * particle.velocity + c1 * r1 * (p - z) + c2 * r2 * (g - z)
    return np.clip(v, -vmax, vmax)


# -- swarm driver ----------------------------------------------------------------------


@dataclass(frozen=True)
class SearchParams:
    swarm_size: int = 30
    iterations: int = 300
    vmax: float = 6.0
    c1: float = 1.0
    c2: float = 1.0
    omega_start: float = 0.9
    omega_end: float = 0.4
    phi_start: float = 5.0
    phi_end: float = 1.0
    k: int = 3
    repair_budget: int = 10_000
    flip_rule: str = "printed"
    seed: int = 0
    lower: LowerConfig = field(default_factory=LowerConfig)

    def __post_init__(self):
        for name in ("swarm_size", "k", "repair_budget"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        for name in ("vmax", "phi_start", "phi_end"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("c1", "c2", "omega_start", "omega_end"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.flip_rule not in FLIP_RULES:
            raise ValueError(f"flip_rule must be one of {FLIP_RULES}")

    def _frac(self, t: int) -> float:
        # t = 1..iterations; the schedules start and end exactly on their bounds
        if self.iterations <= 1:
            return 0.0
        return (t - 1) / (self.iterations - 1)

    def omega(self, t: int) -> float:
        return self.omega_start + (self.omega_end - self.omega_start) * self._frac(t)

    def phi(self, t: int) -> float:
        return self.phi_start + (self.phi_end - self.phi_start) * self._frac(t)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lower"] = asdict(self.lower)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SearchParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown search parameters: {sorted(unknown)}")
        d = dict(d)
        if "lower" in d:
            lower = d["lower"]
            lk = {f.name for f in fields(LowerConfig)}
            bad = set(lower) - lk
            if bad:
                raise ValueError(f"unknown lower-level parameters: {sorted(bad)}")
            d["lower"] = LowerConfig(**lower)
        return cls(**d)


class LowerMemo:
    """Lower-level results keyed by topology.

    Each topology gets its own generator seeded from the lower-level seed and
    the bit string, so a result does not depend on when (or in which swarm
    run) the topology is first met and the memo can be shared across runs.
    """

    def __init__(self, inst: Instance, cfg: LowerConfig | None = None):
        self.inst = inst
        self.cfg = cfg or LowerConfig()
        self.table: dict[int, SizingSolution] = {}
        self.hits = 0

    def __len__(self) -> int:
        return len(self.table)

    def __call__(self, x: Topology) -> SizingSolution:
        key = x.to_int()
        sol = self.table.get(key)
        if sol is not None:
            self.hits += 1
            return sol
        rng = np.random.default_rng(np.random.SeedSequence([self.cfg.seed, self.inst.m, key]))
        sol = optimize_sizing(self.inst, x, self.cfg, rng)
        self.table[key] = sol
        return sol


@dataclass
class SwarmResult:
    designs: list[EvaluatedDesign]
    archive: NoveltyArchive
    global_best: Topology
    repair_failures: int = 0
    lower_calls: int = 0


def _repaired(inst: Instance, x, rng, params: SearchParams, counter: list[int]) -> Topology:
    while True:
        try:
            return repair(inst, x, rng, params.repair_budget)
        except RepairFailure:
            counter[0] += 1
            x = Topology.from_array(rng.random(inst.m) < 0.5)


def _design(x: Topology, sol: SizingSolution, t: int, i: int, nov: float) -> EvaluatedDesign:
    w = sol.weight if sol.feasible else None
    ws = (sol.weight if sol.feasible else np.inf,)
    return EvaluatedDesign(x, True, sol, w, ws, t, i, nov)


def run_nbpso(
    inst: Instance,
    params: SearchParams | None = None,
    rng: np.random.Generator | None = None,
    memo: LowerMemo | None = None,
    progress=None,
) -> SwarmResult:
    """Novelty-driven binary PSO over upper-level feasible topologies.

    Iteration 0 is the repaired random swarm; iterations ``1..iterations``
    update the particles one at a time.  Novelty is measured against the
    archive plus the other particles' current positions; personal and global
    bests are re-scored against that reference whenever they are compared.
    Pass a shared ``memo`` to reuse lower-level results across runs.
    """
    params = params or SearchParams()
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    if memo is None:
        memo = LowerMemo(inst, params.lower)
    elif memo.inst is not inst or memo.cfg != params.lower:
        raise ValueError("memo belongs to another instance or lower-level config")
    m, n, k = inst.m, params.swarm_size, params.k
    calls_before = len(memo)
    failures = [0]
    archive = NoveltyArchive(m)
    designs: list[EvaluatedDesign] = []

    pos = np.zeros((n, m), dtype=bool)
    particles = []
    for i in range(n):
        x = _repaired(inst, Topology.from_array(rng.random(m) < 0.5), rng, params, failures)
        pos[i] = x.array
        v = rng.uniform(-params.vmax, params.vmax, m)
        particles.append(Particle(x, v, x))

    def reference(i: int) -> np.ndarray:
        others = np.delete(pos, i, axis=0)
        if len(archive):
            known = np.fromiter((r.tobytes() in archive._index for r in others), bool, len(others))
            others = np.concatenate([archive.matrix, others[~known]])
        return others

    def score(x: Topology, ref: np.ndarray) -> float:
        return _knn_mean(x.array.astype(bool), ref, k) if len(ref) else 0.0

    scores = [score(p.position, reference(i)) for i, p in enumerate(particles)]
    for i, p in enumerate(particles):
        p.sizing = memo(p.position)
        designs.append(_design(p.position, p.sizing, 0, i, scores[i]))
    g_best = particles[int(np.argmax(scores))].position
    for p in particles:
        archive.add(p.position, 0)
    if progress is not None:
        progress(0, params.iterations)

    for t in range(1, params.iterations + 1):
        omega, phi = params.omega(t), params.phi(t)
        for i, p in enumerate(particles):
            p.position = flip_positions(p, phi, rng, params.flip_rule)
            p.velocity = update_velocity(p, g_best, omega, params.c1, params.c2, rng, params.vmax)
            p.position = _repaired(inst, p.position, rng, params, failures)
            pos[i] = p.position.array
            ref = reference(i)
            nov = score(p.position, ref)
            p.sizing = memo(p.position)
            designs.append(_design(p.position, p.sizing, t, i, nov))
            if nov > score(p.best, ref):
                p.best = p.position
            if nov > score(g_best, ref):
                g_best = p.position
            archive.add(p.position, t)
        if progress is not None:
            progress(t, params.iterations)

    return SwarmResult(designs, archive, g_best, failures[0], len(memo) - calls_before)


# -- reporting ----------------------------------------------------------------------


def top_k_distinct(results: Iterable[EvaluatedDesign], k: int = 3) -> list[EvaluatedDesign]:
    """The ``k`` lightest feasible designs with pairwise distinct topologies."""
    results = list(results)
    if not results:
        raise ValueError("no results")
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted((d for d in results if d.feasible), key=lambda d: d.weight)
    kept, seen = [], set()
    for d in ranked:
        key = d.topology.bits
        if key in seen:
            continue
        seen.add(key)
        kept.append(d)
        if len(kept) == k:
            return kept
    warnings.warn(f"only {len(kept)} distinct feasible designs, asked for {k}", stacklevel=2)
    return kept


def with_lower(params: SearchParams, **changes) -> SearchParams:
    """Copy of ``params`` with some lower-level settings replaced."""
    return replace(params, lower=replace(params.lower, **changes))
