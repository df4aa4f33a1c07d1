"""Exhaustive upper level on the 25-bar tower: where do feasible designs live?"""

from collections import defaultdict

from trusstopo import LowerConfig, enumerate_topologies, load_benchmark

inst = load_benchmark("twentyfive_bar_case1")

# 3 sizing runs per topology keeps this under a minute; use 30 for the real census
designs = enumerate_topologies(inst, LowerConfig(), runs_per_topology=3, seed=1)

by_distance = defaultdict(list)
for d in designs:
    by_distance[d.d_hamming].append(d)

print("d_H  topologies  counting-feasible  best median W")
for dh in sorted(by_distance):
    group = by_distance[dh]
    ws = [d.weight for d in group if d.feasible]
    best = f"{min(ws):.2f}" if ws else "-"
    print(f"{dh:3d}  {len(group):10d}  {sum(d.upper_feasible for d in group):17d}  {best:>13}")
