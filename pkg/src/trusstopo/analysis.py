"""Direct-stiffness analysis of pin-jointed trusses.

The expensive part of the bilevel search is evaluating many sizings of one
topology, so the work is split in two: :class:`TrussModel` does all the
topology-dependent bookkeeping once (active nodes, free degrees of freedom,
per-member unit stiffness blocks) and then solves whole batches of sizings
with a single matrix product and a batched factorisation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instance import Instance, LoadCase, active_member_mask, as_topology

#: relative pivot threshold of the stability test
PIVOT_TOL = 1e-10
#: slack on constraint ratios before a design counts as violating
RATIO_TOL = 1e-6


@dataclass(frozen=True)
class ConstraintReport:
    max_stress_ratio: float
    max_disp_ratio: float
    internally_stable: bool

    @property
    def max_ratio(self) -> float:
        if not self.internally_stable:
            return np.inf
        return max(self.max_stress_ratio, self.max_disp_ratio)

    @property
    def feasible(self) -> bool:
        return (
            self.internally_stable
            and self.max_stress_ratio <= 1.0 + RATIO_TOL
            and self.max_disp_ratio <= 1.0 + RATIO_TOL
        )


UNSTABLE = ConstraintReport(np.inf, np.inf, False)


@dataclass
class AnalysisResult:
    """Response of one sized topology to one load case.

    ``displacements`` has one row per entry of ``node_ids`` (active nodes only),
    ``stresses`` one entry per ``member_ids``.  Reactions are keyed by
    ``(node id, axis)``.  For a mechanism only ``stable`` is meaningful.
    """

    stable: bool
    node_ids: tuple[int, ...] = ()
    member_ids: tuple[int, ...] = ()
    displacements: np.ndarray | None = None
    stresses: np.ndarray | None = None
    reactions: dict[tuple[int, int], float] | None = None


class TrussModel:
    """Stiffness bookkeeping for one topology of an instance.

    Nodes without an incident active member are dropped before assembly.
    Sizings are given per *active group* in the order of ``group_pos``.
    """

    def __init__(self, inst: Instance, x):
        self.inst = inst
        self.topology = as_topology(x)
        mask = active_member_mask(inst, self.topology)
        dim = inst.dimension
        self.members = np.flatnonzero(mask)
        self.group_pos = np.unique(inst.member_group[self.members])
        self.member_col = np.searchsorted(self.group_pos, inst.member_group[self.members])

        ends = inst.member_ends[self.members]
        self.nodes = np.unique(ends) if len(self.members) else np.zeros(0, dtype=int)
        local = np.searchsorted(self.nodes, ends)
        restr = inst.restraints[self.nodes].ravel()
        self.free = np.flatnonzero(~restr)
        self.fixed = np.flatnonzero(restr)
        ndof = len(self.nodes) * dim

        cos = inst.cosines[self.members]
        b_full = np.zeros((len(self.members), ndof))
        rows = np.arange(len(self.members))
        for a in range(dim):
            b_full[rows, local[:, 0] * dim + a] = -cos[:, a]
            b_full[rows, local[:, 1] * dim + a] = cos[:, a]
        self.b_full = b_full
        self.b = b_full[:, self.free]
        self.k_per_area = inst.elastic_modulus / inst.lengths[self.members]
        nf = len(self.free)
        self.unit_stiffness = (
            np.einsum("ea,eb->eab", self.b, self.b) * self.k_per_area[:, None, None]
        ).reshape(len(self.members), nf * nf)

        all_loads = inst.loads
        inactive = np.ones(len(inst.nodes), dtype=bool)
        inactive[self.nodes] = False
        # a load on a node nothing is attached to cannot be carried
        self.load_orphaned = bool(np.any(all_loads[:, inactive, :] != 0.0))
        self.loads_full = all_loads[:, self.nodes, :].reshape(len(inst.load_cases), ndof)
        self.loads = self.loads_full[:, self.free]

        ten, com = inst.stress_bounds
        self.tension = ten[self.members]
        self.compression = com[self.members]
        self.inv_disp_limit = np.tile(1.0 / inst.disp_limits, len(self.nodes))[self.free]
        self.lengths = inst.lengths[self.members]

    @property
    def n_groups(self) -> int:
        return len(self.group_pos)

    @property
    def n_free(self) -> int:
        return len(self.free)

    def member_areas(self, group_areas: np.ndarray) -> np.ndarray:
        """Expand ``(..., n_groups)`` group areas to ``(..., n_members)``."""
        return np.asarray(group_areas, dtype=float)[..., self.member_col]

    def weights(self, group_areas: np.ndarray) -> np.ndarray:
        a = self.member_areas(group_areas)
        return self.inst.density * (a * self.lengths).sum(axis=-1)

    def stiffness(self, member_areas: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(member_areas)
        nf = self.n_free
        return (a @ self.unit_stiffness).reshape(len(a), nf, nf)

    def _stable(self, k: np.ndarray) -> np.ndarray:
        n = len(k)
        if n == 0:
            return np.zeros(0, dtype=bool)
        if self.n_free == 0:
            return np.ones(n, dtype=bool)
        try:
            chol = np.linalg.cholesky(k)
            ok = np.ones(n, dtype=bool)
        except np.linalg.LinAlgError:
            chol = np.zeros_like(k)
            ok = np.zeros(n, dtype=bool)
            for s in range(n):
                try:
                    chol[s] = np.linalg.cholesky(k[s])
                    ok[s] = True
                except np.linalg.LinAlgError:
                    pass
        piv = np.einsum("bii->bi", chol) ** 2
        scale = np.einsum("bii->bi", k).max(axis=1)
        ok &= piv.min(axis=1) > PIVOT_TOL * scale
        return ok

    def solve(self, member_areas: np.ndarray):
        """Batched linear solve.

        Returns ``(stable, u, sigma)`` with shapes ``(B,)``, ``(B, n_lc, n_free)``
        and ``(B, n_lc, n_members)``; rows of unstable samples are NaN.
        """
        a = np.atleast_2d(np.asarray(member_areas, dtype=float))
        nb, nlc, nf = len(a), self.loads.shape[0], self.n_free
        u = np.full((nb, nlc, nf), np.nan)
        sigma = np.full((nb, nlc, len(self.members)), np.nan)
        if len(self.members) == 0 or self.load_orphaned:
            return np.zeros(nb, dtype=bool), u, sigma
        k = self.stiffness(a)
        stable = self._stable(k)
        if stable.any():
            if nf:
                rhs = np.broadcast_to(self.loads.T, (int(stable.sum()), nf, nlc))
                us = np.linalg.solve(k[stable], rhs).transpose(0, 2, 1)
            else:
                us = np.zeros((int(stable.sum()), nlc, 0))
            u[stable] = us
            sigma[stable] = (us @ self.b.T) * self.k_per_area
        return stable, u, sigma

    def ratios(self, group_areas: np.ndarray):
        """Worst stress and displacement ratios over all load cases.

        Returns ``(stable, stress_ratio, disp_ratio)``, one entry per sample;
        unstable samples get ``inf`` ratios.
        """
        ga = np.atleast_2d(group_areas)
        stable, u, sigma = self.solve(self.member_areas(ga))
        sr = np.full(len(ga), np.inf)
        dr = np.full(len(ga), np.inf)
        if stable.any():
            s = sigma[stable]
            r = np.where(s >= 0.0, s / self.tension, -s / self.compression)
            sr[stable] = r.max(axis=(1, 2)) if r.size else 0.0
            d = np.abs(u[stable]) * self.inv_disp_limit
            dr[stable] = d.max(axis=(1, 2)) if d.size else 0.0
        return stable, sr, dr

    def report(self, group_areas: np.ndarray) -> ConstraintReport:
        stable, sr, dr = self.ratios(np.atleast_2d(group_areas))
        if not stable[0]:
            return UNSTABLE
        return ConstraintReport(float(sr[0]), float(dr[0]), True)


def _group_areas(inst: Instance, model: TrussModel, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (inst.m,):
        raise ValueError(f"need {inst.m} group areas, got shape {y.shape}")
    ga = y[model.group_pos]
    if np.any(~(ga > 0.0)):
        bad = [int(inst.group_ids[g]) if inst.group_ids else int(g) for g in model.group_pos[~(ga > 0.0)]]
        raise ValueError(f"active groups {bad} need positive areas")
    return ga


def analyze(inst: Instance, x, y, lc: int | LoadCase = 0) -> AnalysisResult:
    """Displacements, stresses and reactions of ``(x, y)`` under one load case.

    ``lc`` is a load-case index of ``inst`` or a free-standing LoadCase.  A
    mechanism is reported through ``stable=False``, never raised.
    """
    model = TrussModel(inst, x)
    if len(model.members) == 0:
        raise ValueError("topology has no active member")
    ga = _group_areas(inst, model, y)
    dim = inst.dimension
    if isinstance(lc, LoadCase):
        full = np.zeros((len(inst.nodes), dim))
        for nid, f in lc.forces.items():
            full[inst.node_index[nid]] += f
        inactive = np.ones(len(inst.nodes), dtype=bool)
        inactive[model.nodes] = False
        orphaned = bool(np.any(full[inactive] != 0.0))
        f_full = full[model.nodes].ravel()
    else:
        orphaned = model.load_orphaned
        f_full = model.loads_full[lc]

    node_ids = tuple(inst.nodes[k].id for k in model.nodes)
    member_ids = tuple(inst.members[k].id for k in model.members)
    if orphaned:
        return AnalysisResult(False, node_ids, member_ids)
    areas = model.member_areas(ga)
    k = model.stiffness(areas)
    if not model._stable(k)[0]:
        return AnalysisResult(False, node_ids, member_ids)

    u_full = np.zeros(len(model.nodes) * dim)
    if model.n_free:
        u_full[model.free] = np.linalg.solve(k[0], f_full[model.free])
    sigma = model.k_per_area * (model.b_full @ u_full)
    internal = model.b_full.T @ (sigma * areas)
    reactions = {}
    for d in model.fixed:
        reactions[(node_ids[d // dim], int(d % dim))] = float(internal[d] - f_full[d])
    return AnalysisResult(
        True,
        node_ids,
        member_ids,
        displacements=u_full.reshape(len(model.nodes), dim),
        stresses=sigma,
        reactions=reactions,
    )


def check_internal_stability(inst: Instance, x, y) -> bool:
    model = TrussModel(inst, x)
    if len(model.members) == 0 or model.load_orphaned:
        return False
    ga = _group_areas(inst, model, y)
    return bool(model._stable(model.stiffness(model.member_areas(ga)))[0])


def evaluate_constraints(inst: Instance, x, y) -> ConstraintReport:
    """Worst stress/displacement ratios over every load case of ``inst``."""
    model = TrussModel(inst, x)
    if len(model.members) == 0:
        raise ValueError("topology has no active member")
    return model.report(_group_areas(inst, model, y))


def weight(inst: Instance, x, y) -> float:
    """Structural mass ``density * sum(area * length)`` over active members."""
    mask = active_member_mask(inst, x)
    y = np.asarray(y, dtype=float)
    if y.shape != (inst.m,):
        raise ValueError(f"need {inst.m} group areas, got shape {y.shape}")
    if not mask.any():
        return 0.0
    a = y[inst.member_group[mask]]
    if np.any(~(a > 0.0)):
        raise ValueError("active groups need positive areas")
    return float(inst.density * np.dot(a, inst.lengths[mask]))
