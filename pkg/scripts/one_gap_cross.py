"""Group side (trivial group) against comb side (one gap) on a grid, plus M(i eta)/eta."""

import math

import numpy as np

from charm_kit.comb import GapSystem, green_map, martin_map
from charm_kit.green import eval_g
from charm_kit.martin import eval_m
from charm_kit.moebius import SemicircleConfig, TruncationPolicy, enumerate_shells

acc = enumerate_shells(SemicircleConfig.from_triples([(0, 0.0, 1.0)]), TruncationPolicy(0))
lam_star = -0.5
zst = complex(np.exp(1j * math.acos(-lam_star)))
slope = (eval_m(acc, zst).m_prime / (-(1 - 1 / zst**2) / 2)).imag
system = GapSystem(((-1.0, 1.0),), lam_star)
mm, gm = martin_map(system, slope), green_map(system)
print(f"slope from the group side: {slope:.15f}")

err_m = err_g = 0.0
for x in np.linspace(-2, 2, 21):
    for y in np.linspace(0.1, 2, 10):
        z = complex(x, y)
        lam = -(z + 1 / z) / 2
        err_m = max(err_m, abs(eval_m(acc, z).m.imag - mm.im_theta(lam)))
        err_g = max(err_g, abs(-eval_g(acc, z, zst).log_abs - gm.im_theta(lam)))
print(f"max |Im m - M| = {err_m:.2e}, max |G_group - G_comb| = {err_g:.2e}")
for eta in (1e1, 1e2, 1e3, 1e4, 1e5):
    print(f"eta={eta:8.0e}  M(i eta)/eta = {mm.im_theta(1j * eta) / eta:.12f}")
