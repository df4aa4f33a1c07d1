"""Ground-structure instances and topology bit vectors.

An :class:`Instance` is an immutable description of a truss design space:
nodes, candidate members, member groups (one topology bit per group),
supports, load cases, the discrete catalogue of cross-section areas and the
material/limit data.  Units are whatever the instance file uses; nothing in
this package converts them.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np


class InstanceError(ValueError):
    """Malformed or inconsistent instance data.  ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class InstanceParseError(InstanceError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    xyz: tuple[float, ...]
    restrained: tuple[bool, ...]


@dataclass(frozen=True)
class Member:
    id: int
    i: int
    j: int
    group: int


@dataclass(frozen=True)
class LoadCase:
    """Nodal forces of one load case, ``{node id: force vector}``."""

    forces: Mapping[int, tuple[float, ...]]
    name: str = ""


@dataclass(frozen=True)
class StressLimit:
    """Allowable stress magnitudes.

    ``tension`` and ``compression`` are positive global bounds; ``per_member``
    optionally overrides them as ``{member id: (tension, compression)}``.
    """

    tension: float
    compression: float
    per_member: Mapping[int, tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def symmetric(cls, value: float) -> "StressLimit":
        return cls(float(value), float(value))


@dataclass(frozen=True)
class Topology:
    """Upper-level design variable: one bit per member group (1 = active)."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("topology bits must be 0 or 1")

    def __len__(self):
        return len(self.bits)

    @classmethod
    def from_array(cls, arr: Iterable) -> "Topology":
        return cls(tuple(int(b) for b in np.asarray(arr, dtype=int).ravel()))

    @classmethod
    def from_string(cls, s: str) -> "Topology":
        s = s.strip()
        if not s or set(s) - {"0", "1"}:
            raise ValueError(f"not a bit string: {s!r}")
        return cls(tuple(int(c) for c in s))

    @classmethod
    def from_int(cls, value: int, m: int) -> "Topology":
        """Most significant bit first, so ascending integers enumerate
        bit strings in lexicographic order."""
        return cls(tuple((value >> (m - 1 - k)) & 1 for k in range(m)))

    @classmethod
    def full(cls, m: int) -> "Topology":
        return cls((1,) * m)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=bool)

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    def to_int(self) -> int:
        return int(self.to_string(), 2) if self.bits else 0

    def hamming_to_full(self) -> int:
        return len(self.bits) - sum(self.bits)

    def __str__(self):
        return self.to_string()


def as_topology(x) -> Topology:
    if isinstance(x, Topology):
        return x
    if isinstance(x, str):
        return Topology.from_string(x)
    return Topology.from_array(x)


@dataclass(frozen=True, eq=False)
class Instance:
    name: str
    dimension: int
    nodes: tuple[Node, ...]
    members: tuple[Member, ...]
    groups: tuple[tuple[int, ...], ...]
    necessary_nodes: frozenset[int]
    size_set: tuple[float, ...]
    density: float
    elastic_modulus: float
    load_cases: tuple[LoadCase, ...]
    stress_limit: StressLimit
    # one entry per axis, None = unconstrained; the whole field may be None
    displacement_limit: tuple[float | None, ...] | None = None
    group_ids: tuple[int, ...] = ()
    provenance: str = ""
    units: Mapping[str, str] = field(default_factory=dict)
    source_hash: str = ""

    def __post_init__(self):
        validate(self)

    @property
    def m(self) -> int:
        """Number of topology bits (member groups)."""
        return len(self.groups)

    @property
    def n_topologies(self) -> int:
        return 2 ** self.m

    # -- cached index arrays used by the numerical modules --------------------

    @cached_property
    def node_index(self) -> dict[int, int]:
        return {n.id: k for k, n in enumerate(self.nodes)}

    @cached_property
    def member_index(self) -> dict[int, int]:
        return {mb.id: k for k, mb in enumerate(self.members)}

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array([n.xyz for n in self.nodes], dtype=float)

    @cached_property
    def restraints(self) -> np.ndarray:
        return np.array([n.restrained for n in self.nodes], dtype=bool)

    @cached_property
    def member_ends(self) -> np.ndarray:
        idx = self.node_index
        return np.array([(idx[mb.i], idx[mb.j]) for mb in self.members], dtype=int)

    @cached_property
    def member_group(self) -> np.ndarray:
        """Group position (0..m-1) of every member."""
        gpos = {}
        for g, ids in enumerate(self.groups):
            for mid in ids:
                gpos[mid] = g
        return np.array([gpos[mb.id] for mb in self.members], dtype=int)

    @cached_property
    def lengths(self) -> np.ndarray:
        d = self.coords[self.member_ends[:, 1]] - self.coords[self.member_ends[:, 0]]
        return np.sqrt((d * d).sum(axis=1))

    @cached_property
    def cosines(self) -> np.ndarray:
        d = self.coords[self.member_ends[:, 1]] - self.coords[self.member_ends[:, 0]]
        return d / self.lengths[:, None]

    @cached_property
    def stress_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-member (tension, compression) allowables."""
        sl = self.stress_limit
        ten = np.full(len(self.members), sl.tension)
        com = np.full(len(self.members), sl.compression)
        for mid, (t, c) in sl.per_member.items():
            k = self.member_index[mid]
            ten[k], com[k] = t, c
        return ten, com

    @cached_property
    def loads(self) -> np.ndarray:
        """Array (n_load_cases, n_nodes, dimension) of applied forces."""
        out = np.zeros((len(self.load_cases), len(self.nodes), self.dimension))
        for c, lc in enumerate(self.load_cases):
            for nid, f in lc.forces.items():
                out[c, self.node_index[nid]] += f
        return out

    @cached_property
    def loaded_nodes(self) -> frozenset[int]:
        mask = np.any(self.loads != 0.0, axis=(0, 2))
        return frozenset(n.id for n, hit in zip(self.nodes, mask) if hit)

    @cached_property
    def disp_limits(self) -> np.ndarray:
        """Per-axis displacement allowable (inf where unconstrained)."""
        if self.displacement_limit is None:
            return np.full(self.dimension, np.inf)
        return np.array([np.inf if v is None else float(v) for v in self.displacement_limit])

    @cached_property
    def size_array(self) -> np.ndarray:
        return np.array(self.size_set, dtype=float)

    @cached_property
    def group_sizes(self) -> np.ndarray:
        return np.array([len(g) for g in self.groups], dtype=int)


def validate(inst: Instance) -> None:
    """Check the structural invariants of an instance; raise InstanceError."""
    if inst.dimension not in (2, 3):
        raise InstanceError("dimension", f"must be 2 or 3, got {inst.dimension}")
    if not inst.nodes:
        raise InstanceError("nodes", "no nodes")
    if not inst.members:
        raise InstanceError("members", "no members")
    node_ids = [n.id for n in inst.nodes]
    if len(set(node_ids)) != len(node_ids):
        raise InstanceError("nodes", "duplicate node id")
    for n in inst.nodes:
        if len(n.xyz) != inst.dimension or not all(math.isfinite(c) for c in n.xyz):
            raise InstanceError("nodes", f"node {n.id} needs {inst.dimension} finite coordinates")
        if len(n.restrained) != inst.dimension:
            raise InstanceError("nodes", f"node {n.id} needs {inst.dimension} restraint flags")
    known = set(node_ids)
    member_ids = [mb.id for mb in inst.members]
    if len(set(member_ids)) != len(member_ids):
        raise InstanceError("members", "duplicate member id")
    coords = {n.id: np.array(n.xyz) for n in inst.nodes}
    for mb in inst.members:
        if mb.i not in known or mb.j not in known:
            raise InstanceError("members", f"member {mb.id} references an unknown node")
        if mb.i == mb.j:
            raise InstanceError("members", f"member {mb.id} connects node {mb.i} to itself")
        if np.linalg.norm(coords[mb.i] - coords[mb.j]) <= 0.0:
            raise InstanceError("members", f"member {mb.id} has zero length")

    if not inst.groups:
        raise InstanceError("groups", "no groups")
    flat = [mid for g in inst.groups for mid in g]
    if any(len(g) == 0 for g in inst.groups):
        raise InstanceError("groups", "empty group")
    if len(flat) != len(set(flat)) or set(flat) != set(member_ids):
        raise InstanceError("groups", "groups must partition the member set exactly")
    if inst.group_ids:
        if len(inst.group_ids) != len(inst.groups):
            raise InstanceError("groups", "group id count mismatch")
        gid_of = {mid: gid for gid, g in zip(inst.group_ids, inst.groups) for mid in g}
        for mb in inst.members:
            if gid_of[mb.id] != mb.group:
                raise InstanceError("members", f"member {mb.id} group disagrees with groups[]")

    s = inst.size_set
    if not s:
        raise InstanceError("size_set", "empty")
    if any(b <= a for a, b in zip(s, s[1:])) or s[0] <= 0:
        raise InstanceError("size_set", "must be positive and strictly increasing")
    if not inst.density > 0:
        raise InstanceError("density", "must be positive")
    if not inst.elastic_modulus > 0:
        raise InstanceError("elastic_modulus", "must be positive")

    if not inst.load_cases:
        raise InstanceError("load_cases", "no load case")
    for c, lc in enumerate(inst.load_cases):
        if not any(any(v != 0 for v in f) for f in lc.forces.values()):
            raise InstanceError("load_cases", f"load case {c} has no nonzero force")
        for nid, f in lc.forces.items():
            if nid not in known:
                raise InstanceError("load_cases", f"load case {c} references unknown node {nid}")
            if len(f) != inst.dimension:
                raise InstanceError("load_cases", f"load case {c}: force at node {nid} has wrong length")

    sl = inst.stress_limit
    if not (sl.tension > 0 and sl.compression > 0):
        raise InstanceError("stress_limit", "allowables must be positive")
    for mid, (t, c) in sl.per_member.items():
        if mid not in set(member_ids):
            raise InstanceError("stress_limit", f"unknown member {mid}")
        if not (t > 0 and c > 0):
            raise InstanceError("stress_limit", f"member {mid} allowables must be positive")
    if inst.displacement_limit is not None:
        if len(inst.displacement_limit) != inst.dimension:
            raise InstanceError("displacement_limit", "need one entry per axis")
        if any(v is not None and not v > 0 for v in inst.displacement_limit):
            raise InstanceError("displacement_limit", "limits must be positive")

    restrained = {n.id for n in inst.nodes if any(n.restrained)}
    loaded = {nid for lc in inst.load_cases for nid, f in lc.forces.items() if any(v != 0 for v in f)}
    if set(inst.necessary_nodes) != restrained | loaded:
        raise InstanceError(
            "necessary_nodes", "must equal supported nodes plus loaded nodes"
        )


# -- serialization -------------------------------------------------------------

_REQUIRED = (
    "dimension",
    "nodes",
    "members",
    "groups",
    "necessary_nodes",
    "size_set",
    "density",
    "elastic_modulus",
    "load_cases",
    "stress_limit",
    "displacement_limit",
)


def _stress_limit_from(doc: Any) -> StressLimit:
    if isinstance(doc, (int, float)):
        return StressLimit.symmetric(doc)
    if not isinstance(doc, dict):
        raise InstanceError("stress_limit", "expected a number or an object")
    try:
        ten = float(doc["tension"])
        com = float(doc["compression"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError("stress_limit", "needs numeric tension and compression") from exc
    per = {}
    for key, val in (doc.get("per_member") or {}).items():
        per[int(key)] = (float(val["tension"]), float(val["compression"]))
    return StressLimit(ten, com, per)


def _displacement_limit_from(doc: Any, dim: int):
    if doc is None:
        return None
    if isinstance(doc, (int, float)):
        return (float(doc),) * dim
    if isinstance(doc, list):
        return tuple(None if v is None else float(v) for v in doc)
    raise InstanceError("displacement_limit", "expected null, a number or a per-axis list")


def instance_from_dict(doc: Mapping[str, Any], name: str = "", source_hash: str = "") -> Instance:
    for key in _REQUIRED:
        if key not in doc:
            raise InstanceError(key, "missing required field")
    try:
        dim = int(doc["dimension"])
        nodes = tuple(
            Node(int(n["id"]), tuple(float(c) for c in n["xyz"]), tuple(bool(r) for r in n["restrained"]))
            for n in doc["nodes"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError("nodes", f"bad node entry ({exc})") from exc
    try:
        members = tuple(
            Member(int(mb["id"]), int(mb["i"]), int(mb["j"]), int(mb["group"])) for mb in doc["members"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError("members", f"bad member entry ({exc})") from exc
    try:
        group_ids = tuple(int(g["id"]) for g in doc["groups"])
        groups = tuple(tuple(int(mid) for mid in g["members"]) for g in doc["groups"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError("groups", f"bad group entry ({exc})") from exc
    try:
        load_cases = tuple(
            LoadCase(
                {int(ld["node"]): tuple(float(v) for v in ld["force"]) for ld in lc["loads"]},
                str(lc.get("name", "")),
            )
            for lc in doc["load_cases"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError("load_cases", f"bad load case ({exc})") from exc
    try:
        size_set = tuple(float(v) for v in doc["size_set"])
        density = float(doc["density"])
        modulus = float(doc["elastic_modulus"])
        necessary = frozenset(int(v) for v in doc["necessary_nodes"])
    except (TypeError, ValueError) as exc:
        raise InstanceError("size_set", f"bad numeric field ({exc})") from exc

    return Instance(
        name=str(doc.get("name", name)),
        dimension=dim,
        nodes=nodes,
        members=members,
        groups=groups,
        group_ids=group_ids,
        necessary_nodes=necessary,
        size_set=size_set,
        density=density,
        elastic_modulus=modulus,
        load_cases=load_cases,
        stress_limit=_stress_limit_from(doc["stress_limit"]),
        displacement_limit=_displacement_limit_from(doc["displacement_limit"], dim),
        provenance=str(doc.get("provenance", "")),
        units=dict(doc.get("units", {})),
        source_hash=source_hash,
    )


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    sl = inst.stress_limit
    if sl.per_member or sl.tension != sl.compression:
        stress: Any = {
            "tension": sl.tension,
            "compression": sl.compression,
            "per_member": {
                str(k): {"tension": t, "compression": c} for k, (t, c) in sl.per_member.items()
            },
        }
    else:
        stress = sl.tension
    return {
        "name": inst.name,
        "provenance": inst.provenance,
        "units": dict(inst.units),
        "dimension": inst.dimension,
        "nodes": [{"id": n.id, "xyz": list(n.xyz), "restrained": list(n.restrained)} for n in inst.nodes],
        "members": [{"id": mb.id, "i": mb.i, "j": mb.j, "group": mb.group} for mb in inst.members],
        "groups": [
            {"id": gid, "members": list(g)}
            for gid, g in zip(inst.group_ids or range(1, inst.m + 1), inst.groups)
        ],
        "necessary_nodes": sorted(inst.necessary_nodes),
        "size_set": list(inst.size_set),
        "density": inst.density,
        "elastic_modulus": inst.elastic_modulus,
        "load_cases": [
            {
                "name": lc.name,
                "loads": [{"node": nid, "force": list(f)} for nid, f in lc.forces.items()],
            }
            for lc in inst.load_cases
        ],
        "stress_limit": stress,
        "displacement_limit": None if inst.displacement_limit is None else list(inst.displacement_limit),
    }


def load_instance(path: str | Path) -> Instance:
    """Read and validate an instance document (JSON)."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InstanceParseError("document", f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceParseError("document", f"{path}: top level must be an object")
    return instance_from_dict(doc, name=path.stem, source_hash=hashlib.sha256(raw).hexdigest())


BENCHMARKS = (
    "ten_bar",
    "fifteen_bar",
    "twentyfive_bar_case1",
    "twentyfive_bar_case2",
    "fiftytwo_bar",
    "seventytwo_bar",
)


def benchmark_path(name: str) -> Path:
    if name not in BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; choose from {BENCHMARKS}")
    return Path(str(resources.files("trusstopo") / "data" / f"{name}.json"))


def load_benchmark(name: str) -> Instance:
    return load_instance(benchmark_path(name))


# -- topology helpers ----------------------------------------------------------


def _check_len(inst: Instance, x: Topology) -> None:
    if len(x) != inst.m:
        raise ValueError(f"topology has {len(x)} bits, instance needs {inst.m}")


def active_member_mask(inst: Instance, x) -> np.ndarray:
    x = as_topology(x)
    _check_len(inst, x)
    return x.array[inst.member_group]


def expand_topology(inst: Instance, x) -> frozenset[int]:
    """Member ids switched on by topology ``x``."""
    mask = active_member_mask(inst, x)
    return frozenset(mb.id for mb, on in zip(inst.members, mask) if on)


def member_length(inst: Instance, member_id: int) -> float:
    try:
        k = inst.member_index[member_id]
    except KeyError:
        raise KeyError(f"unknown member id {member_id}") from None
    return float(inst.lengths[k])


def make_instance(
    *,
    name: str,
    dimension: int,
    coords: Mapping[int, Sequence[float]],
    supports: Mapping[int, Sequence[bool]],
    connectivity: Sequence[tuple[int, int]],
    groups: Sequence[Sequence[int]],
    loads: Sequence[Mapping[int, Sequence[float]]],
    size_set: Sequence[float],
    density: float,
    elastic_modulus: float,
    stress_limit: float | StressLimit,
    displacement_limit=None,
    provenance: str = "",
    units: Mapping[str, str] | None = None,
) -> Instance:
    """Build an instance from compact tables; member ids are 1-based positions
    in ``connectivity`` and group ids 1-based positions in ``groups``."""
    free = (False,) * dimension
    nodes = tuple(
        Node(nid, tuple(float(c) for c in xyz), tuple(bool(r) for r in supports.get(nid, free)))
        for nid, xyz in coords.items()
    )
    gid_of = {mid: g + 1 for g, ids in enumerate(groups) for mid in ids}
    members = tuple(Member(k + 1, i, j, gid_of.get(k + 1, 0)) for k, (i, j) in enumerate(connectivity))
    load_cases = tuple(
        LoadCase({nid: tuple(float(v) for v in f) for nid, f in lc.items()}, f"LC{c + 1}")
        for c, lc in enumerate(loads)
    )
    restrained = {nid for nid, r in supports.items() if any(r)}
    loaded = {nid for lc in load_cases for nid, f in lc.forces.items() if any(f)}
    if not isinstance(stress_limit, StressLimit):
        stress_limit = StressLimit.symmetric(stress_limit)
    if isinstance(displacement_limit, (int, float)):
        displacement_limit = (float(displacement_limit),) * dimension
    return Instance(
        name=name,
        dimension=dimension,
        nodes=nodes,
        members=members,
        groups=tuple(tuple(g) for g in groups),
        group_ids=tuple(range(1, len(groups) + 1)),
        necessary_nodes=frozenset(restrained | loaded),
        size_set=tuple(float(s) for s in size_set),
        density=float(density),
        elastic_modulus=float(elastic_modulus),
        load_cases=load_cases,
        stress_limit=stress_limit,
        displacement_limit=None if displacement_limit is None else tuple(displacement_limit),
        provenance=provenance,
        units=dict(units or {}),
    )
