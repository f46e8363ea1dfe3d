"""
Adaptive adversaries against the engine and a greedy baseline
=============================================================
"""

import math

from onlinepack.harness import duel

# big item then small items: ratio sqrt(k / (4 eps)) whatever the algorithm does
for k in (2, 4, 8, 16):
    rep = duel("slack-deterministic", k, "1/4")
    print(f"k={k:2d} ratio {float(rep.ratio):.4f}  target {math.sqrt(k):.4f}  "
          f"items {rep.meta['length']}")

# k-subsets built around whatever is currently kept
for k in (3, 5, 8):
    for algorithm in ("engine", "greedy"):
        rep = duel("slack-subsets", k, "1/4", algorithm=algorithm)
        print(f"k={k} {algorithm:6s} kept {rep.final_set} witness {rep.meta['witness']}")
