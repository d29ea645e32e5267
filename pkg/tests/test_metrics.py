import numpy as np
import pytest
from hypothesis import given, strategies as st

from marlfs.metrics import ConfusionCounts, compute_metrics, confusion, score


def test_hand_count():
    assert confusion([1, 1, 0], [1, 0, 0]) == ConfusionCounts(tp=1, fp=1, tn=1, fn=0)


def test_perfect_and_inverted():
    y = np.array([0, 1, 1, 0, 1])
    c = confusion(y, y)
    assert c.fp == c.fn == 0
    c = confusion(1 - y, y)
    assert c.tp == c.tn == 0


def test_length_mismatch():
    with pytest.raises(ValueError):
        confusion([1, 0], [1])


def test_non_binary():
    with pytest.raises(ValueError):
        confusion([2, 0], [1, 0])


@pytest.mark.parametrize("counts,expected", [
    ((3, 1, 4, 2), (0.7, 0.75, 0.6, 2 / 3)),
    ((0, 0, 5, 5), (0.5, 0.0, 0.0, 0.0)),
    ((10, 0, 10, 0), (1.0, 1.0, 1.0, 1.0)),
])
def test_formulas(counts, expected):
    r = compute_metrics(ConfusionCounts(*counts))
    assert (r.accuracy, r.precision, r.recall, r.f_score) == pytest.approx(expected, abs=1e-12)
    assert r.empirical_error == 1 - r.accuracy


def test_all_zero_counts():
    with pytest.raises(ValueError):
        compute_metrics(ConfusionCounts(0, 0, 0, 0))


labels = st.lists(st.integers(0, 1), min_size=1, max_size=40)


@given(st.data())
def test_properties(data):
    a = data.draw(labels)
    p = data.draw(st.lists(st.integers(0, 1), min_size=len(a), max_size=len(a)))
    r, s = score(p, a), score(a, p)
    assert r.accuracy == s.accuracy
    assert (r.precision, r.recall) == (s.recall, s.precision)
    for v in r.as_dict().values():
        assert 0.0 <= v <= 1.0
    if r.precision + r.recall > 0:
        assert r.f_score == pytest.approx(2 / (1 / r.precision + 1 / r.recall) if r.precision and r.recall else 0.0)
        assert min(r.precision, r.recall) - 1e-12 <= r.f_score <= max(r.precision, r.recall) + 1e-12
