"""Novelty-driven binary swarm on the 52-bar frame, short run."""

from trusstopo import LowerConfig, SearchParams, load_benchmark, run_nbpso, top_k_distinct

inst = load_benchmark("fiftytwo_bar")
params = SearchParams(iterations=40, lower=LowerConfig(max_evals=2000), seed=3)

res = run_nbpso(inst, params)
print(f"{len(res.archive)} distinct topologies visited, {res.lower_calls} sizing runs")

for label, d in zip("abc", top_k_distinct(res.designs, 3)):
    removed = [mid for g in d.removed_groups() for mid in inst.groups[g]]
    print(f"({label}) W = {d.weight:.2f} kg  bits {d.topology}  removed members {removed}")

# novelty only: the swarm never sees W, yet light designs show up because
# it sweeps the feasible region systematically
