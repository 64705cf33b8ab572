import pytest
from hypothesis import given
from hypothesis import strategies as st

from charm_kit.trend import FAILS, HOLDS, INCONCLUSIVE, decay_ratio, verdict_from_increments


@given(st.floats(0.01, 3.0), st.floats(1e-6, 1e3))
def test_ratio_of_geometric_increments(q, a):
    inc = [a * q**k for k in range(6)]
    assert decay_ratio(inc) == pytest.approx(q, rel=1e-9)


@pytest.mark.parametrize("q,verdict", [(0.5, HOLDS), (0.95, INCONCLUSIVE), (1.0, INCONCLUSIVE), (1.3, FAILS)])
def test_thresholds(q, verdict):
    assert verdict_from_increments([q**k for k in range(5)]).verdict == verdict


def test_sign_ignored_and_zero_tail():
    assert decay_ratio([1.0, -0.5, 0.25]) == pytest.approx(0.5)
    assert decay_ratio([1.0, 0.0, 0.0]) == 0.0


def test_short_and_exhausted():
    v = verdict_from_increments([1.0, 0.5])
    assert v.verdict == INCONCLUSIVE and v.ratio is None
    assert verdict_from_increments([], exhausted=True).verdict == HOLDS
    assert verdict_from_increments([1.0, 2.0, 4.0]).to_dict()["verdict"] == FAILS
