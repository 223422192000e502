import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from workload_snn.errors import RangeError, ShapeError
from workload_snn.metrics import compute_metrics


def test_perfect():
    m = compute_metrics([0, 1, 1, 0], [0, 1, 1, 0])
    assert (m.accuracy, m.f1, m.precision, m.recall) == (1.0, 1.0, 1.0, 1.0)


def test_confusion_arithmetic():
    # TP=2 FP=1 FN=1 TN=6
    y_true = [1, 1, 0, 1] + [0] * 6
    y_pred = [1, 1, 1, 0] + [0] * 6
    m = compute_metrics(y_true, y_pred)
    assert m.precision == pytest.approx(2 / 3, abs=1e-3)
    assert m.recall == pytest.approx(2 / 3, abs=1e-3)
    assert m.f1 == pytest.approx(2 / 3, abs=1e-3)
    assert m.accuracy == pytest.approx(0.8)


def test_all_negative_predictions():
    m = compute_metrics([0, 1, 1, 0], [0, 0, 0, 0])
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)


def test_length_mismatch():
    with pytest.raises(ShapeError):
        compute_metrics([0, 1], [0])


def test_bad_labels():
    with pytest.raises(RangeError):
        compute_metrics([0, 2], [0, 1])


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=50))
def test_flip_invariance_and_ranges(pairs):
    t, p = map(np.array, zip(*pairs))
    a, b = compute_metrics(t, p), compute_metrics(1 - t, 1 - p)
    assert a.accuracy == b.accuracy
    for v in a.to_dict().values():
        assert 0.0 <= v <= 1.0
    if a.precision > 0 and a.recall > 0:
        assert a.f1 == pytest.approx(2 * a.precision * a.recall / (a.precision + a.recall))
