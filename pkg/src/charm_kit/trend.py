"""Verdicts from the decay of the last few increments of a partial-sum sequence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HOLDS, FAILS, INCONCLUSIVE = "holds", "fails", "inconclusive"


@dataclass(frozen=True)
class TrendVerdict:
    verdict: str
    ratio: float | None  # fitted per-step decay ratio of the increments
    increments: tuple[float, ...]
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "ratio": self.ratio,
            "increments": list(self.increments),
            "note": self.note,
        }


def decay_ratio(increments, window: int = 3) -> float:
    """exp of the slope of a least-squares line through log|increment| (last ``window``)."""
    tail = np.abs(np.asarray(increments, dtype=float)[-window:])
    if np.any(tail == 0):
        return 0.0
    slope = np.polyfit(np.arange(len(tail)), np.log(tail), 1)[0]
    return float(np.exp(slope))


def verdict_from_increments(increments, window: int = 3, exhausted: bool = False) -> TrendVerdict:
    """Geometric-decay verdict: ratio < 0.9 holds, > 1.1 fails, otherwise inconclusive.

    ``exhausted`` marks a series that has no further terms (a finite group),
    which trivially converges.
    """
    inc = tuple(float(x) for x in increments)
    if exhausted:
        return TrendVerdict(HOLDS, None, inc, "series has no further terms")
    if len(inc) < window:
        return TrendVerdict(INCONCLUSIVE, None, inc, f"fewer than {window} increments")
    q = decay_ratio(inc, window)
    if q < 0.9:
        v = HOLDS
    elif q > 1.1:
        v = FAILS
    else:
        v = INCONCLUSIVE
    return TrendVerdict(v, q, inc)
