from fractions import Fraction

import numpy as np
import pytest

from ransomflow.classifiers import ClassifierSpec, KnnParams, train, train_decision_tree
from ransomflow.errors import SchemaMismatch, StratificationInfeasible
from ransomflow.evaluation import (ConfusionMatrix, ExperimentReport, MetricsReport, ResultRow,
                                   compute_metrics, cross_validate, evaluate_holdout, f_measure, pct,
                                   stratified_folds)
from ransomflow.features import Dataset, Mode, select_features


def test_headline_arithmetic():
    assert compute_metrics(ConfusionMatrix(tp=971, fn=29, fp=16, tn=984)).tpr == pytest.approx(0.971)
    assert compute_metrics(ConfusionMatrix(tp=971, fn=29, fp=16, tn=984)).fpr == pytest.approx(0.016)
    assert f_measure(0.973, 0.971) == pytest.approx(0.9720, abs=5e-4)
    assert f_measure(0.973, 0.971) == pytest.approx(2 * 0.973 * 0.971 / (0.973 + 0.971), abs=1e-15)


def test_undefined_metrics_not_zero():
    report = compute_metrics(ConfusionMatrix(tn=5))
    assert report.tpr is None and report.precision is None and report.f_measure is None
    assert report.fpr == 0.0
    assert set(report.undefined) == {"tpr", "precision", "recall", "f_measure"}
    assert pct(None) == "n/a"


def test_weighted_average_by_support():
    cm = ConfusionMatrix(tp=8, fn=2, fp=3, tn=27)
    w = compute_metrics(cm).weighted
    good_tpr, mal_tpr = Fraction(27, 30), Fraction(8, 10)
    assert w["tpr"] == pytest.approx(float((30 * good_tpr + 10 * mal_tpr) / 40), abs=1e-15)


def test_confusion_from_predictions():
    cm = ConfusionMatrix.from_predictions([1, 1, 0, 0, 1], [1, 0, 1, 0, 1])
    assert cm == ConfusionMatrix(tp=2, fp=1, tn=1, fn=1)
    with pytest.raises(ValueError):
        ConfusionMatrix(tp=-1)


def test_stratified_folds_partition():
    y = np.array([0] * 37 + [1] * 23)
    folds = stratified_folds(y, 10, seed=3)
    assert sorted(set(folds.tolist())) == list(range(10))
    for c in (0, 1):
        sizes = np.bincount(folds[y == c], minlength=10)
        assert sizes.max() - sizes.min() <= 1
    assert np.array_equal(folds, stratified_folds(y, 10, seed=3))
    with pytest.raises(StratificationInfeasible):
        stratified_folds(np.array([0] * 20 + [1] * 5), 10, 1)


def separable(n=60):
    y = (np.arange(n) >= n // 2).astype(int)
    # a wide gap between the classes keeps every held-out point on its side of the cut
    X = np.column_stack([np.arange(n) + 100 * y, np.arange(n) % 7])
    return Dataset(("a", "b"), X, y, [f"g{i}" for i in range(n)])


def test_cv_on_separable_data():
    report = cross_validate(separable(), ClassifierSpec("DecisionTree"), k=10, seed=1)
    assert (report.tpr, report.fpr) == (1.0, 0.0)
    assert report.confusion.total == 60 and len(report.folds) == 10
    again = cross_validate(separable(), ClassifierSpec("DecisionTree"), k=10, seed=1)
    assert again.confusion == report.confusion and again.folds == report.folds


def test_holdout_empty_and_constant():
    ds = separable()
    model = train_decision_tree(ds)
    empty = compute_metrics(ConfusionMatrix())
    report = evaluate_holdout(model, ds.subset([]))
    assert report.confusion.total == 0 and report.metrics() == empty.metrics()
    assert all(v is None for k, v in report.metrics().items() if k != "fpr") and report.fpr is None

    always_malware = train_decision_tree(Dataset(("a", "b"), [[0, 0]], [1], ["g"]))
    assert evaluate_holdout(always_malware, ds).tpr == 1.0
    always_good = train_decision_tree(Dataset(("a", "b"), [[0, 0]], [0], ["g"]))
    assert evaluate_holdout(always_good, ds).tpr == 0.0


def test_memorizing_knn(toy_dataset):
    model = train(toy_dataset, ClassifierSpec("KNN", KnnParams(1)))
    assert evaluate_holdout(model, toy_dataset).tpr == 1.0


def test_holdout_schema_mismatch(toy_dataset):
    model = train(toy_dataset, ClassifierSpec("KNN"))
    with pytest.raises(SchemaMismatch):
        evaluate_holdout(model, select_features(toy_dataset, Mode.REDUCED))


def _report(tpr_full, tpr_reduced):
    def mr(tpr):
        return MetricsReport(ConfusionMatrix(), tpr, 0.0, 1.0, tpr, None, build_time=0.5)
    rows = []
    for mode, tpr in ((Mode.FULL, tpr_full), (Mode.REDUCED, tpr_reduced)):
        for protocol in ("cv", "holdout"):
            rows.append(ResultRow("DecisionTree", mode, protocol, mr(tpr)))
    return ExperimentReport(tuple(rows), ("DecisionTree",))


@pytest.mark.parametrize("full, reduced, label", [
    (0.9, 0.9, "With/Without"), (0.95, 0.9, "Without"), (0.9, 0.95, "With"),
    (None, None, "With/Without"), (None, 0.5, "With"),
])
def test_summary_mode_selection(full, reduced, label):
    (row,) = _report(full, reduced).best_per_classifier()
    assert row["feature_selection"] == label
    assert row["tpr"] == (reduced if label == "With" else full)


def test_report_renderings():
    report = _report(0.9712, 0.9712)
    text = report.to_text()
    assert "97.12" in text and "With/Without" in text
    assert report.to_csv().splitlines()[0].startswith(
        "classifier,mode,protocol,tpr,fpr,precision,recall,f_measure,build_time_s")
    assert report.without_timings().build_times()[0]["full_s"] is None
