"""Finitely generated approximations: keep some semicircles, flatten the rest.

Each level re-enumerates the subgroup generated by the kept semicircles, so
level n has its own reduced-word structure and truncation tail.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvariantViolation
from .green import CriticalPoint, eval_g, find_critical_points
from .martin import eval_m, find_martin_critical
from .moebius import OrbitAccumulator, SemicircleConfig, TruncationPolicy, enumerate_shells


@dataclass(frozen=True)
class ApproximationLadder:
    config: SemicircleConfig
    levels: tuple[frozenset, ...]
    accumulators: tuple[OrbitAccumulator, ...]

    def __len__(self):
        return len(self.levels)


def build_ladder(config: SemicircleConfig, levels, policy: TruncationPolicy | None = None) -> ApproximationLadder:
    subsets = tuple(frozenset(int(i) for i in lv) for lv in levels)
    if not subsets:
        raise ConfigError("ladder needs at least one level")
    for lv in subsets:
        if 0 not in lv:
            raise ConfigError("every level must keep semicircle 0")
        missing = [i for i in lv if i not in config]
        if missing:
            raise ConfigError(f"level refers to unknown semicircles {sorted(missing)}")
    for lo, hi in zip(subsets, subsets[1:]):
        if not lo < hi:
            raise ConfigError("levels must be strictly nested")
    accs = tuple(enumerate_shells(config.restrict(lv), policy) for lv in subsets)
    return ApproximationLadder(config, subsets, accs)


def prefix_levels(config: SemicircleConfig) -> list[list[int]]:
    """{0}, {0, k1}, {0, k1, k2}, ... in increasing generator index."""
    idx = config.generator_indices
    return [[0, *idx[:n]] for n in range(len(idx) + 1)]


@dataclass(frozen=True)
class ConvergenceReport:
    levels: tuple[tuple[int, ...], ...]
    g_values: tuple[complex, ...] = ()
    g_tails: tuple[float, ...] = ()
    m_values: tuple[complex, ...] = ()
    m_tails: tuple[float, ...] = ()
    green_points: tuple[dict, ...] = ()  # per level: arc -> CriticalPoint
    martin_points: tuple[dict, ...] = ()
    deltas: dict = field(default_factory=dict)
    monotone: dict = field(default_factory=dict)
    violations: tuple = ()

    def to_dict(self) -> dict:
        def pts(levels):
            return [{str(k): p.to_dict() for k, p in sorted(lv.items())} for lv in levels]

        return {
            "levels": [list(lv) for lv in self.levels],
            "g_abs": [abs(v) for v in self.g_values],
            "g_values": [{"re": v.real, "im": v.imag} for v in self.g_values],
            "g_tails": list(self.g_tails),
            "m_values": [{"re": v.real, "im": v.imag} for v in self.m_values],
            "m_tails": list(self.m_tails),
            "green_points": pts(self.green_points),
            "martin_points": pts(self.martin_points),
            "deltas": {k: list(v) for k, v in self.deltas.items()},
            "monotone": dict(self.monotone),
            "violations": [list(v) for v in self.violations],
        }


def _sorted_levels(ladder):
    return tuple(tuple(sorted(lv)) for lv in ladder.levels)


def _tail_abs(log_tail: float) -> float:
    # |g| <= 1, so a log-space error t moves |g| by at most expm1(t)
    return math.expm1(log_tail)


def divisor_check(ladder: ApproximationLadder, z: complex, z_star: complex, strict: bool = True) -> ConvergenceReport:
    """|g_0(z)| >= |g_1(z)| >= ... up to the combined truncation tails.

    g_n divides g_{n+1} because Gamma_n is a subgroup, so the chain must be
    monotone; a violation beyond the tails raises InvariantViolation.
    """
    evs = [eval_g(acc, z, z_star) for acc in ladder.accumulators]
    absg = [abs(e.value) for e in evs]
    tails = [_tail_abs(e.tail_bound) for e in evs]
    viol = []
    for n in range(len(evs) - 1):
        slack = tails[n] + tails[n + 1]
        if absg[n] < absg[n + 1] - slack:
            viol.append((n, absg[n], absg[n + 1], slack))
    report = ConvergenceReport(
        levels=_sorted_levels(ladder),
        g_values=tuple(e.value for e in evs),
        g_tails=tuple(tails),
        deltas={"g_abs": tuple(absg[n] - absg[n + 1] for n in range(len(absg) - 1))},
        monotone={"divisor_chain": not viol},
        violations=tuple(viol),
    )
    if viol and strict:
        raise InvariantViolation(f"divisor chain violated at z={z}: {viol}")
    return report


def strictly_decreasing(xs) -> bool:
    return all(a > b for a, b in zip(xs, xs[1:]))


def critical_tracking(ladder: ApproximationLadder, z_star: complex, z: complex = 0.5 + 1.5j) -> ConvergenceReport:
    """Per-level critical points of g_n' and m_n', and level-to-level deltas.

    Arcs flattened at a level contribute no critical point there.  Deltas of
    critical points are reported per arc over the levels where the arc exists;
    value deltas of g_n(z) and m_n(z) are taken at the sample point ``z``.
    """
    if len(ladder) < 2:
        raise ConfigError("critical tracking needs at least two levels")
    g_pts, m_pts, g_vals, m_vals, g_tails, m_tails = [], [], [], [], [], []
    for acc in ladder.accumulators:
        g_pts.append({p.semicircle_index: p for p in find_critical_points(acc, z_star)})
        m_pts.append({p.semicircle_index: p for p in find_martin_critical(acc)})
        ge = eval_g(acc, z, z_star)
        me = eval_m(acc, z)
        g_vals.append(ge.value)
        g_tails.append(_tail_abs(ge.tail_bound))
        m_vals.append(me.m)
        m_tails.append(me.tail_bound)

    deltas, monotone = {}, {}
    deltas["g"] = tuple(abs(g_vals[n] - g_vals[n + 1]) for n in range(len(g_vals) - 1))
    deltas["m"] = tuple(abs(m_vals[n] - m_vals[n + 1]) for n in range(len(m_vals) - 1))
    for kind, table in (("green", g_pts), ("martin", m_pts)):
        arcs = sorted(set().union(*[set(t) for t in table]))
        for k in arcs:
            seq = [t[k] for t in table if k in t]
            if len(seq) >= 2:
                deltas[f"{kind}_c{k}"] = tuple(
                    abs(seq[i].location - seq[i + 1].location) for i in range(len(seq) - 1)
                )
    for key, d in deltas.items():
        monotone[key] = strictly_decreasing(d)
    return ConvergenceReport(
        levels=_sorted_levels(ladder),
        g_values=tuple(g_vals),
        g_tails=tuple(g_tails),
        m_values=tuple(m_vals),
        m_tails=tuple(m_tails),
        green_points=tuple(g_pts),
        martin_points=tuple(m_pts),
        deltas=deltas,
        monotone=monotone,
    )


def sweep_csv(report: ConvergenceReport) -> str:
    """One row per level: |g_n|, |m_n|, critical-point locations, deltas to the next level."""
    arcs = sorted(set().union(*[set(t) for t in report.martin_points]) if report.martin_points else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["level", "kept", "abs_g", "abs_m", "delta_g", "delta_m"]
    for k in arcs:
        head += [f"martin_c{k}_re", f"martin_c{k}_im"]
        if k != 0:
            head += [f"green_c{k}_re", f"green_c{k}_im"]
    w.writerow(head)
    n_levels = len(report.levels)
    for n in range(n_levels):
        row = [n, " ".join(map(str, report.levels[n])),
               repr(abs(report.g_values[n])), repr(abs(report.m_values[n])),
               repr(report.deltas["g"][n]) if n < n_levels - 1 else "",
               repr(report.deltas["m"][n]) if n < n_levels - 1 else ""]
        for k in arcs:
            cells = []
            for table in ((report.martin_points,) if k == 0 else (report.martin_points, report.green_points)):
                p = table[n].get(k)
                cells += [repr(p.location.real), repr(p.location.imag)] if p else ["", ""]
            row += cells
        w.writerow(row)
    return buf.getvalue()


def shell_masses_by_level(ladder: ApproximationLadder, length: int) -> list[float]:
    out = []
    for acc in ladder.accumulators:
        out.append(float(acc.shell_mass[length]) if length < acc.n_shells else 0.0)
    return out


def widom_products(ladder: ApproximationLadder, z_star: complex) -> list[float]:
    """Widom product per level (empty product 1 at the trivial level)."""
    out = []
    for acc in ladder.accumulators:
        pts: list[CriticalPoint] = find_critical_points(acc, z_star)
        out.append(float(np.prod([p.value for p in pts])) if pts else 1.0)
    return out
