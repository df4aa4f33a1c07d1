"""Upper-level topology feasibility and the (1+1)-EA repair operator.

A topology is upper-level feasible when every necessary node (support or
loaded node) is active and the structure passes the counting rules for
external stability: non-positive degree of freedom, and enough members plus
restraint components at every active node.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .instance import Instance, Topology, active_member_mask, as_topology


class RepairFailure(RuntimeError):
    """The repair budget ran out before a feasible topology was reached."""


class ViolationVector(NamedTuple):
    alpha: int  # inactive necessary nodes
    beta: int  # positive part of the degree of freedom
    theta: int  # active nodes failing a node-degree rule

    @property
    def feasible(self) -> bool:
        return self.alpha == 0 and self.beta == 0 and self.theta == 0


class _NodeTables:
    """Per-instance incidence data, cached on the instance object."""

    def __init__(self, inst: Instance):
        n_nodes = len(inst.nodes)
        inc = np.zeros((n_nodes, len(inst.members)), dtype=np.int32)
        ends = inst.member_ends
        inc[ends[:, 0], np.arange(len(ends))] = 1
        inc[ends[:, 1], np.arange(len(ends))] = 1
        # incidence per group: node x group member count
        self.node_group = np.zeros((n_nodes, inst.m), dtype=np.int32)
        for g in range(inst.m):
            self.node_group[:, g] = inc[:, inst.member_group == g].sum(axis=1)
        self.restraint_count = inst.restraints.sum(axis=1)
        idx = inst.node_index
        self.necessary = np.zeros(n_nodes, dtype=bool)
        self.necessary[[idx[n] for n in inst.necessary_nodes]] = True
        self.loaded = np.zeros(n_nodes, dtype=bool)
        self.loaded[[idx[n] for n in inst.loaded_nodes]] = True
        self.group_sizes = inst.group_sizes
        self.dim = inst.dimension


def _tables(inst: Instance) -> _NodeTables:
    tab = inst.__dict__.get("_feasibility_tables")
    if tab is None:
        tab = _NodeTables(inst)
        inst.__dict__["_feasibility_tables"] = tab
    return tab


def _bits(inst: Instance, x) -> np.ndarray:
    x = as_topology(x) if not isinstance(x, np.ndarray) else x
    arr = x.array if isinstance(x, Topology) else np.asarray(x, dtype=bool)
    if arr.shape != (inst.m,):
        raise ValueError(f"topology has {arr.size} bits, instance needs {inst.m}")
    return arr.astype(np.int32)


def _node_degrees(inst: Instance, bits: np.ndarray) -> np.ndarray:
    return _tables(inst).node_group @ bits


def violations(inst: Instance, x) -> ViolationVector:
    """Violation degrees ``(alpha, beta, theta)`` of topology ``x``."""
    tab = _tables(inst)
    bits = _bits(inst, x)
    deg = tab.node_group @ bits
    active = deg > 0
    alpha = int(np.count_nonzero(tab.necessary & ~active))
    n_members = int(tab.group_sizes @ bits)
    dof = tab.dim * int(active.sum()) - n_members - int(tab.restraint_count[active].sum())
    beta = max(0, dof)
    support = deg + tab.restraint_count
    bad_loaded = active & tab.loaded & (support < tab.dim)
    bad_free = active & ~tab.loaded & (support <= tab.dim)
    theta = int(np.count_nonzero(bad_loaded | bad_free))
    return ViolationVector(alpha, beta, theta)


def check_G1(inst: Instance, x) -> bool:
    """Every necessary node has at least one active incident member."""
    tab = _tables(inst)
    deg = tab.node_group @ _bits(inst, x)
    return bool(np.all(deg[tab.necessary] > 0))


def check_G2(inst: Instance, x) -> bool:
    """Counting conditions for external stability."""
    v = violations(inst, x)
    return v.beta == 0 and v.theta == 0


def is_feasible(inst: Instance, x) -> bool:
    return violations(inst, x).feasible


def dominates(v1, v2) -> bool:
    """Lexicographic acceptance of ``v1`` over ``v2``: alpha, then beta, then
    theta, with ties on all three accepted."""
    a1, b1, t1 = v1
    a2, b2, t2 = v2
    if a1 != a2:
        return a1 < a2
    if b1 != b2:
        return b1 < b2
    return t1 <= t2


def repair(inst: Instance, x, rng: np.random.Generator, budget: int = 10_000) -> Topology:
    """(1+1)-EA towards an upper-level feasible topology.

    Standard bit mutation with rate 1/m (redrawn until at least one bit
    flips); the offspring replaces the parent when :func:`dominates` accepts
    it.  Raises :class:`RepairFailure` after ``budget`` offspring.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    parent = _bits(inst, x).astype(bool)
    pv = violations(inst, parent)
    if pv.feasible:
        return as_topology(x)
    m = inst.m
    for _ in range(budget):
        flips = rng.random(m) < 1.0 / m
        while not flips.any():
            flips = rng.random(m) < 1.0 / m
        child = parent ^ flips
        cv = violations(inst, child)
        if dominates(cv, pv):
            parent, pv = child, cv
            if pv.feasible:
                return Topology.from_array(parent)
    raise RepairFailure(f"no feasible topology within {budget} mutations")


def feasible_census(inst: Instance) -> np.ndarray:
    """Boolean G1-and-G2 flag for every topology, indexed by its integer value."""
    m = inst.m
    out = np.zeros(2**m, dtype=bool)
    for v in range(2**m):
        out[v] = violations(inst, Topology.from_int(v, m)).feasible
    return out
