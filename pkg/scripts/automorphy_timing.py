"""Enumeration size, time and worst automorphy defect as the word length grows."""

import argparse
import time

import numpy as np

from charm_kit.green import eval_g
from charm_kit.moebius import SemicircleConfig, TruncationPolicy, apply, enumerate_shells, generator
from charm_kit.runner import interior_points

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--max-length", type=int, default=12)
args = p.parse_args()

cfg = SemicircleConfig.from_triples([(0, 0.0, 1.0), (1, 3.0, 1.0), (2, -3.0, 1.0)])
zs = interior_points(cfg, 10, np.random.default_rng(0))
print(" L  elements   enum s  eval s  tail       max defect")
for L in range(2, args.max_length + 1, 2):
    t0 = time.perf_counter()
    acc = enumerate_shells(cfg, TruncationPolicy(L, 1e-300))
    t1 = time.perf_counter()
    worst = 0.0
    for z in zs:
        base = abs(eval_g(acc, z, 1j).value)
        for k in cfg.generator_indices:
            g = generator(cfg, k)
            for h in (g, g.inverse()):
                worst = max(worst, abs(abs(eval_g(acc, apply(h, z), 1j).value) - base))
    t2 = time.perf_counter()
    print(f"{L:2d} {acc.size:9d} {t1 - t0:8.2f} {t2 - t1:7.2f}  {acc.tail_bound:.2e}  {worst:.2e}")
