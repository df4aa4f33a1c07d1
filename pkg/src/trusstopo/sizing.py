"""Lower-level discrete sizing optimiser.

Given an upper-level feasible topology, find one catalogue area per active
member group that minimises the structural weight subject to internal
stability and the stress/displacement allowables.

The search is a (mu/mu_w, lambda) evolution strategy with covariance matrix
adaptation over log-areas.  Every sampled point is snapped to the catalogue
by :func:`probabilistic_round` before the finite element analysis.  Two
truss-specific operators act on the evaluated offspring:

* :func:`mapping_adjust` scales a violating design up by its worst
  constraint ratio (all responses of a linear truss scale as 1/area under
  uniform resizing, so this lands on the constraint boundary);
* :func:`resize_near_boundary` occasionally shrinks a slack feasible design
  so that its worst ratio falls just below one.

Modified offspring are written back into the population before selection.
The run ends with an iterated local search on catalogue indices: descent
over one-step decreases and decrease/increase swaps, restarted from random
kicks of the incumbent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import RATIO_TOL, UNSTABLE, ConstraintReport, TrussModel, weight
from .feasibility import is_feasible
from .instance import Instance, Topology, as_topology


@dataclass(frozen=True)
class LowerConfig:
    """Settings of one sizing run; ``None`` sizes are derived from the
    number of active groups ``n`` as ``4 + floor(3 ln n)`` and half of that."""

    popsize: int | None = None
    parents: int | None = None
    max_evals: int = 5000
    restarts: int = 1
    seed: int = 0
    resize_prob: float = 0.1
    mapping_exponent: float = 1.0
    stall_generations: int = 100
    local_search: bool = True

    def __post_init__(self):
        if self.popsize is not None and self.popsize < 2:
            raise ValueError("popsize must be >= 2")
        if self.parents is not None:
            if self.parents < 1 or (self.popsize is not None and self.parents > self.popsize):
                raise ValueError("need 1 <= parents <= popsize")
        if self.popsize is not None and self.max_evals < self.popsize:
            raise ValueError("max_evals must be at least popsize")
        if self.max_evals < 1 or self.restarts < 0:
            raise ValueError("bad budget")

    def sizes(self, n: int) -> tuple[int, int]:
        lam = self.popsize or 4 + int(math.floor(3 * math.log(max(n, 1))))
        mu = self.parents or max(1, lam // 2)
        return lam, mu


@dataclass
class SizingSolution:
    topology: Topology
    y: np.ndarray  # per-group areas, NaN for inactive groups
    weight: float
    report: ConstraintReport
    evaluations_used: int

    @property
    def feasible(self) -> bool:
        return self.report.feasible

    def areas_string(self) -> str:
        return ";".join("" if np.isnan(v) else repr(float(v)) for v in self.y)


# -- catalogue operators ---------------------------------------------------------


def probabilistic_round(value, size_set, rng: np.random.Generator):
    """Snap continuous area(s) onto the catalogue.

    Values outside the catalogue range clamp to its ends.  A value between
    neighbours ``lo < v <= hi`` becomes ``hi`` with probability
    ``(v - lo) / (hi - lo)`` and ``lo`` otherwise; grid points map to
    themselves.  Returns a float for scalar input, an array otherwise.
    """
    s = np.asarray(size_set, dtype=float)
    v = np.clip(np.asarray(value, dtype=float), s[0], s[-1])
    hi_idx = np.searchsorted(s, v, side="left")
    lo_idx = np.maximum(hi_idx - 1, 0)
    lo, hi = s[lo_idx], s[hi_idx]
    span = np.where(hi > lo, hi - lo, 1.0)
    p_up = np.where(hi > lo, (v - lo) / span, 1.0)
    up = rng.random(v.shape) < p_up
    out = np.where(up, hi, lo)
    return float(out) if out.ndim == 0 else out


def _round_indices(v: np.ndarray, s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    v = np.clip(v, s[0], s[-1])
    hi_idx = np.searchsorted(s, v, side="left")
    lo_idx = np.maximum(hi_idx - 1, 0)
    lo, hi = s[lo_idx], s[hi_idx]
    p_up = np.where(hi > lo, (v - lo) / np.where(hi > lo, hi - lo, 1.0), 1.0)
    return np.where(rng.random(v.shape) < p_up, hi_idx, lo_idx)


def mapping_adjust(y, report: ConstraintReport, s_max: float | None = None, exponent: float = 1.0):
    """Scale every area by ``r**exponent`` when the worst ratio ``r`` exceeds one."""
    y = np.asarray(y, dtype=float)
    r = report.max_ratio
    if not report.internally_stable or not r > 1.0:
        return y.copy()
    out = y * r**exponent
    return out if s_max is None else np.minimum(out, s_max)


def resize_near_boundary(
    y,
    report: ConstraintReport,
    rng: np.random.Generator,
    prob: float = 0.1,
    band: tuple[float, float] = (0.9, 1.0),
    s_max: float | None = None,
):
    """With probability ``prob`` rescale ``y`` so its predicted worst ratio
    is a uniform draw from ``band``.  Designs already inside the band, and
    unstable ones, are returned unchanged."""
    y = np.asarray(y, dtype=float)
    r = report.max_ratio
    if prob <= 0.0 or not report.internally_stable or band[0] <= r <= band[1] or r <= 0:
        return y.copy()
    if rng.random() >= prob:
        return y.copy()
    target = rng.uniform(*band)
    out = y * (r / target)
    return out if s_max is None else np.minimum(out, s_max)


# -- the optimiser ---------------------------------------------------------------


class _Run:
    def __init__(self, model: TrussModel, cfg: LowerConfig, rng: np.random.Generator):
        self.model = model
        self.cfg = cfg
        self.rng = rng
        self.s = model.inst.size_array
        self.log_s = np.log(self.s)
        self.n = model.n_groups
        self.evals = 0
        self.cache: dict[bytes, tuple[int, float, float]] = {}
        self.best_idx: np.ndarray | None = None
        self.best_key = (3, 0.0)

    def evaluate(self, idx: np.ndarray):
        """Rank keys for a batch of catalogue index vectors.

        Designs already analysed in this run are served from a cache and
        do not count against the evaluation budget.
        """
        nb = len(idx)
        cls = np.empty(nb, dtype=int)
        val = np.empty(nb)
        ratio = np.empty(nb)
        keys = [k.tobytes() for k in idx]
        todo = [k for k in range(nb) if keys[k] not in self.cache]
        # duplicates inside one batch are analysed once
        first = {}
        for k in todo:
            first.setdefault(keys[k], k)
        fresh = list(first.values())
        if fresh:
            areas = self.s[idx[fresh]]
            stable, sr, dr = self.model.ratios(areas)
            self.evals += len(fresh)
            r = np.maximum(sr, dr)
            w = self.model.weights(areas)
            feas = stable & (sr <= 1 + RATIO_TOL) & (dr <= 1 + RATIO_TOL)
            for j, k in enumerate(fresh):
                # lexicographic: feasible by weight, stable by ratio, unstable last
                if feas[j]:
                    entry = (0, float(w[j]), float(r[j]))
                elif stable[j]:
                    entry = (1, float(r[j]), float(r[j]))
                else:
                    entry = (2, 0.0, np.inf)
                self.cache[keys[k]] = entry
                key = entry[:2]
                if key < self.best_key:
                    self.best_key = key
                    self.best_idx = idx[k].copy()
        for k in range(nb):
            cls[k], val[k], ratio[k] = self.cache[keys[k]]
        return cls, val, ratio, cls < 2

    def remaining(self) -> int:
        return self.cfg.max_evals - self.evals

    def cma(self, mean: np.ndarray, sigma: float, budget: int) -> None:
        n, rng = self.n, self.rng
        lo, hi = self.log_s[0], self.log_s[-1]
        lam, mu = self.cfg.sizes(n)
        w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        w /= w.sum()
        mueff = 1.0 / np.sum(w**2)
        cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
        cs = (mueff + 2) / (n + mueff + 5)
        c1 = 2 / ((n + 1.3) ** 2 + mueff)
        cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
        damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
        chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
        step_cap = math.sqrt(n) + 2 * n / (n + 2)

        cov = np.eye(n)
        pc = np.zeros(n)
        ps = np.zeros(n)
        start = self.evals
        last_best = self.best_key
        stall = 0
        gen = 0
        s_max_log = hi
        while self.evals - start + 3 * lam <= budget and self.remaining() >= 3 * lam:
            gen += 1
            evals_d, evec = np.linalg.eigh(cov)
            dvec = np.sqrt(np.maximum(evals_d, 1e-20))
            bd = evec * dvec
            z = rng.standard_normal((lam, n))
            xs = np.clip(mean + sigma * (z @ bd.T), lo, hi)
            idx = _round_indices(np.exp(xs), self.s, rng)
            cls, val, ratio, stable = self.evaluate(idx)

            # violated but stable: scale up onto the constraint boundary
            viol = stable & (cls == 1)
            if viol.any():
                xs[viol] = np.minimum(
                    xs[viol] + self.cfg.mapping_exponent * np.log(ratio[viol])[:, None], s_max_log
                )
                idx[viol] = _round_indices(np.exp(xs[viol]), self.s, rng)
                c2, v2, r2, _ = self.evaluate(idx[viol])
                cls[viol], val[viol], ratio[viol] = c2, v2, r2

            # slack feasible designs: occasionally pull towards the boundary
            slack = (cls == 0) & (ratio < 0.9) & (rng.random(lam) < self.cfg.resize_prob)
            if slack.any():
                target = rng.uniform(0.9, 1.0, int(slack.sum()))
                xs[slack] = np.maximum(xs[slack] + np.log(ratio[slack] / target)[:, None], lo)
                idx[slack] = _round_indices(np.exp(xs[slack]), self.s, rng)
                c2, v2, r2, _ = self.evaluate(idx[slack])
                cls[slack], val[slack], ratio[slack] = c2, v2, r2

            order = np.lexsort((val, cls))
            # selection uses the (possibly modified) points; steps are capped
            # in Mahalanobis norm so injected points do not blow up the paths
            ys = (xs - mean) / sigma
            inv_sqrt = (evec / dvec) @ evec.T
            zn = ys @ inv_sqrt.T
            norms = np.linalg.norm(zn, axis=1)
            scale = np.minimum(1.0, step_cap / np.maximum(norms, 1e-12))
            ys *= scale[:, None]
            ysel = ys[order[:mu]]
            yw = w @ ysel
            mean = mean + sigma * yw

            ps = (1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt @ yw)
            hsig = np.linalg.norm(ps) / math.sqrt(1 - (1 - cs) ** (2 * gen)) < (1.4 + 2 / (n + 1)) * chi_n
            pc = (1 - cc) * pc + hsig * math.sqrt(cc * (2 - cc) * mueff) * yw
            rank_mu = (ysel.T * w) @ ysel
            cov = (
                (1 - c1 - cmu) * cov
                + c1 * (np.outer(pc, pc) + (1 - hsig) * cc * (2 - cc) * cov)
                + cmu * rank_mu
            )
            cov = (cov + cov.T) / 2
            sigma *= math.exp((cs / damps) * (np.linalg.norm(ps) / chi_n - 1))
            sigma = min(sigma, hi - lo)

            if self.best_key < last_best:
                last_best = self.best_key
                stall = 0
            else:
                stall += 1
            if stall >= self.cfg.stall_generations or sigma * dvec.max() < 1e-4:
                break

    def _weight_of(self, idx: np.ndarray) -> float:
        entry = self.cache[idx.tobytes()]
        return entry[1] if entry[0] == 0 else np.inf

    def _descend(self, cur: np.ndarray) -> np.ndarray:
        """Best-improvement descent over one-step decreases, then over
        decrease/increase swaps, from the feasible design ``cur``."""
        n, top = self.n, len(self.s) - 1
        cur_w = self._weight_of(cur)
        while self.remaining() > 0:
            moved = False
            for swaps in (False, True):
                cands = []
                for g in range(n):
                    if cur[g] == 0:
                        continue
                    if not swaps:
                        c = cur.copy()
                        c[g] -= 1
                        cands.append(c)
                        continue
                    for h in range(n):
                        if h != g and cur[h] < top:
                            c = cur.copy()
                            c[g] -= 1
                            c[h] += 1
                            cands.append(c)
                if not cands or self.remaining() <= 0:
                    continue
                cands = np.array(cands)
                if len(cands) > self.remaining():
                    cands = cands[self.rng.permutation(len(cands))[: self.remaining()]]
                cls, val, _, _ = self.evaluate(cands)
                val = np.where(cls == 0, val, np.inf)
                k = int(np.argmin(val))
                if val[k] < cur_w:
                    cur, cur_w = cands[k].copy(), float(val[k])
                    moved = True
                    break
            if not moved:
                break
        return cur

    def local_search(self) -> None:
        """Descent from the best design, then iterated perturbation + descent
        until the budget is spent or ``stall_generations`` kicks fail."""
        if self.best_idx is None or self.best_key[0] != 0:
            return
        top = len(self.s) - 1
        cur = self._descend(self.best_idx.copy())
        cur_w = self._weight_of(cur)
        fails = 0
        while self.remaining() > 0 and fails < self.cfg.stall_generations:
            p = cur.copy()
            k = self.rng.integers(2, 4) if self.n > 1 else 1
            for g in self.rng.choice(self.n, size=min(k, self.n), replace=False):
                p[g] = np.clip(p[g] + self.rng.choice((-2, -1, 1, 2)), 0, top)
            cls, _, ratio, stable = self.evaluate(p[None])
            if cls[0] == 1:
                # scale up uniformly onto the boundary, rounding upwards
                want = self.s[p] * ratio[0]
                p = np.minimum(np.searchsorted(self.s, want * (1 - 1e-12), side="left"), top)
                cls, _, _, _ = self.evaluate(p[None])
            if cls[0] != 0:
                fails += 1
                continue
            q = self._descend(p)
            q_w = self._weight_of(q)
            if q_w < cur_w - 1e-12:
                cur, cur_w = q, q_w
                fails = 0
            else:
                fails += 1

    def run(self) -> np.ndarray | None:
        lo, hi = self.log_s[0], self.log_s[-1]
        top = np.full((1, self.n), len(self.s) - 1)
        cls, _, ratio, stable = self.evaluate(top)
        if not stable[0]:
            # mechanisms are geometric: no positive sizing can fix them
            return None
        r0 = ratio[0]
        mean = np.full(self.n, np.clip(hi + math.log(max(r0, 1e-12)), lo, hi))
        es_budget = int(0.8 * self.cfg.max_evals)
        for rs in range(self.cfg.restarts + 1):
            left = es_budget - self.evals
            if left <= 0:
                break
            share = left // (self.cfg.restarts + 1 - rs)
            self.cma(mean, 0.2 * (hi - lo), share)
            mean = self.rng.uniform(lo, hi, self.n)
        if self.cfg.local_search:
            self.local_search()
        return self.best_idx


def optimize_sizing(
    inst: Instance,
    x,
    cfg: LowerConfig | None = None,
    rng: np.random.Generator | None = None,
) -> SizingSolution:
    """Best discrete sizing found for topology ``x`` within the budget.

    If no feasible sizing turns up, the least-violating one is returned
    with ``feasible == False``; a mechanism returns an unstable report.
    """
    cfg = cfg or LowerConfig()
    x = as_topology(x)
    if not is_feasible(inst, x):
        raise ValueError("optimize_sizing needs an upper-level feasible topology")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    model = TrussModel(inst, x)
    run = _Run(model, cfg, rng)
    best = run.run()
    y = np.full(inst.m, np.nan)
    if best is None:
        y[model.group_pos] = inst.size_array[-1]
        return SizingSolution(x, y, weight(inst, x, y), UNSTABLE, run.evals)
    y[model.group_pos] = inst.size_array[best]
    report = model.report(y[model.group_pos])
    return SizingSolution(x, y, weight(inst, x, y), report, run.evals)
