"""Analyse the classic ten-bar cantilever with a published sizing."""

import numpy as np

from trusstopo import Topology, analyze, evaluate_constraints, load_benchmark, weight

inst = load_benchmark("ten_bar")
print(inst.provenance)

# best known discrete sizing of the full structure (in^2, member order 1..10)
y = np.array([33.5, 1.62, 22.9, 14.2, 1.62, 1.62, 7.97, 22.9, 22.0, 1.62])
x = Topology.full(inst.m)

res = analyze(inst, x, y)
for mid, s in zip(res.member_ids, res.stresses):
    print(f"member {mid:2d}  stress {s:8.3f} ksi")

rep = evaluate_constraints(inst, x, y)
print(f"W = {weight(inst, x, y):.2f} lb")
print(f"stress ratio {rep.max_stress_ratio:.4f}, displacement ratio {rep.max_disp_ratio:.4f}")

# the reactions balance the two 100 kip loads
print("vertical reactions:", sum(v for (n, a), v in res.reactions.items() if a == 1))
