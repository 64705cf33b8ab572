"""Widom partial sums of the cos and geometric gap families versus truncation size."""

import argparse

import numpy as np

from charm_kit.comb import cos_family, geometric_family, green_map, solve_mu_martin, widom_sum_gaps
from charm_kit.trend import verdict_from_increments

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("--sizes", default="4,8,16,32")
args = p.parse_args()
sizes = [int(n) for n in args.sizes.split(",")]

for name, family in (("cos", cos_family), ("geometric", geometric_family)):
    sums = []
    for n in sizes:
        system = family(n)
        ws = widom_sum_gaps(green_map(system), solve_mu_martin(system))
        sums.append(ws.total)
        print(f"{name:9s} N={n:3d}  sum={ws.total:.8f}  last term={ws.terms[-1]:.3e}")
    v = verdict_from_increments(np.diff(sums), window=min(3, len(sums) - 1))
    print(f"{name:9s} increments {np.diff(sums).round(6).tolist()} -> {v.verdict} (ratio {v.ratio})\n")
