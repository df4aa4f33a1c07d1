"""Lower level only: discrete sizing of two ten-bar topologies."""

import numpy as np

from trusstopo import LowerConfig, load_benchmark, optimize_sizing

inst = load_benchmark("ten_bar")

for bits in ("1111111111", "1011001110"):
    ws = []
    for seed in range(5):
        sol = optimize_sizing(inst, bits, LowerConfig(seed=seed))
        ws.append(sol.weight)
    print(f"{bits}: best {min(ws):.2f}, median {np.median(ws):.2f} lb")
    print("   areas", sol.areas_string())

# removing members 2, 5, 6 and 10 (node 6 drops out) saves about 10%
