"""Hand-computed oracles for the evaluation metrics."""

import numpy as np
import pytest

from incdur.metrics import (
    classification_metrics,
    confusion_counts,
    f1_macro,
    mape,
    mape_excluding_zero,
    rmse,
)

TOL = 1e-9


def test_confusion_counts_direct():
    actual = [1, 1, 0, 0, 1]
    predicted = [1, 0, 1, 0, 1]
    c = confusion_counts(actual, predicted, positive_label=1)
    assert (c.tp, c.fp, c.tn, c.fn) == (2, 1, 1, 1)
    assert c.total == 5


def test_classification_metrics_perfect():
    m = classification_metrics([0, 1, 1, 0], [0, 1, 1, 0], positive_label=1)
    for key in ("precision", "recall", "accuracy", "f1"):
        assert m[key] == pytest.approx(1.0, abs=TOL)


def test_classification_metrics_tabulated_counts():
    # tp=2, fp=1, fn=3, tn=4: precision 2/3, recall 2/5, F1 0.5, accuracy 0.6
    actual = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
    predicted = [1, 1, 0, 0, 0, 1, 0, 0, 0, 0]
    m = classification_metrics(actual, predicted, positive_label=1)
    assert m["precision"] == pytest.approx(2 / 3, abs=TOL)
    assert m["recall"] == pytest.approx(2 / 5, abs=TOL)
    assert m["f1"] == pytest.approx(0.5, abs=TOL)
    assert m["accuracy"] == pytest.approx(0.6, abs=TOL)


def test_classification_metrics_zero_denominators():
    # no positives present, none predicted: convention case
    m = classification_metrics([0, 0, 0], [0, 0, 0], positive_label=1)
    assert m["precision"] == 0.0
    assert m["recall"] == 0.0
    assert m["f1"] == 0.0
    assert m["accuracy"] == pytest.approx(1.0, abs=TOL)


def test_f1_macro_perfect_three_classes():
    y = [0, 1, 2, 0, 1, 2]
    assert f1_macro(y, y, [0, 1, 2]) == pytest.approx(1.0, abs=TOL)


def test_f1_macro_symmetric_binary_confusion():
    # tp=fn=fp=tn=1 for both classes -> per-class F1 = 0.5, macro 0.5
    actual = [1, 1, 0, 0]
    predicted = [1, 0, 1, 0]
    assert f1_macro(actual, predicted, [0, 1]) == pytest.approx(0.5, abs=TOL)


def test_f1_macro_single_class_predictions():
    # balanced 3-class set, everything predicted as class 0 -> macro = 1/6
    actual = [0, 0, 1, 1, 2, 2]
    predicted = [0, 0, 0, 0, 0, 0]
    assert f1_macro(actual, predicted, [0, 1, 2]) == pytest.approx(1 / 6, abs=TOL)


def test_mape_ten_percent():
    assert mape([100.0], [110.0]) == pytest.approx(10.0, abs=TOL)


def test_mape_zero_error():
    assert mape([7.0, 3.0], [7.0, 3.0]) == pytest.approx(0.0, abs=TOL)


def test_mape_tabulated():
    assert mape([50.0, 200.0], [100.0, 100.0]) == pytest.approx(75.0, abs=TOL)


def test_mape_rejects_nonpositive_actual():
    with pytest.raises(ValueError):
        mape([0.0, 1.0], [1.0, 1.0])


def test_mape_excluding_zero_counts():
    value, excluded = mape_excluding_zero([0.0, 100.0], [5.0, 110.0])
    assert excluded == 1
    assert value == pytest.approx(10.0, abs=TOL)


def test_mape_scale_invariance():
    a = np.array([3.0, 9.0, 27.0])
    f = np.array([4.0, 8.0, 30.0])
    assert mape(a, f) == pytest.approx(mape(10 * a, 10 * f), abs=TOL)


def test_rmse_identical():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == pytest.approx(0.0, abs=TOL)


def test_rmse_tabulated():
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5), abs=TOL)


def test_rmse_single_pair():
    assert rmse([10.0], [13.0]) == pytest.approx(3.0, abs=TOL)


def test_metrics_permutation_invariant():
    rng = np.random.default_rng(0)
    a = rng.uniform(1, 10, 30)
    f = rng.uniform(1, 10, 30)
    perm = rng.permutation(30)
    assert mape(a, f) == pytest.approx(mape(a[perm], f[perm]), abs=TOL)
    assert rmse(a, f) == pytest.approx(rmse(a[perm], f[perm]), abs=TOL)
