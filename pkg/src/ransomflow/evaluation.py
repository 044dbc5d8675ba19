"""Confusion matrices, detection metrics, cross-validation and experiment reports.

Malware is the positive class throughout. A metric whose denominator is
zero is reported as ``None`` (undefined), never as 0.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .classifiers import ClassifierSpec, Model, predict_dataset, train
from .errors import StratificationInfeasible
from .features import (CLASS_VALUES, FULL_FEATURES, GOODWARE, MALWARE, REDUCED_FEATURES, Dataset,
                       Mode, select_features)

METRICS = ("tpr", "fpr", "precision", "recall", "f_measure")
RECORD_FIELDS = ("classifier", "mode", "protocol", *METRICS, "build_time_s")
MODE_TITLES = {Mode.FULL: "Without Feature Selection", Mode.REDUCED: "With Feature Selection"}
SELECTION_LABELS = {Mode.FULL: "Without", Mode.REDUCED: "With"}


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_predictions(cls, truth: Iterable[int], predicted: Iterable[int]) -> ConfusionMatrix:
        t = np.asarray(list(truth) if not isinstance(truth, np.ndarray) else truth, dtype=np.int64)
        p = np.asarray(list(predicted) if not isinstance(predicted, np.ndarray) else predicted, dtype=np.int64)
        return cls(tp=int(((t == MALWARE) & (p == MALWARE)).sum()),
                   fp=int(((t == GOODWARE) & (p == MALWARE)).sum()),
                   tn=int(((t == GOODWARE) & (p == GOODWARE)).sum()),
                   fn=int(((t == MALWARE) & (p == GOODWARE)).sum()))

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def flipped(self) -> ConfusionMatrix:
        """The same matrix read with Goodware as the positive class."""
        return ConfusionMatrix(tp=self.tn, fp=self.fn, tn=self.tp, fn=self.fp)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def f_measure(precision: float | None, recall: float | None) -> float | None:
    if precision is None or recall is None or precision + recall == 0:
        return None
    return 2 * (recall * precision) / (recall + precision)


def _positive_metrics(cm: ConfusionMatrix) -> dict[str, float | None]:
    tpr = _ratio(cm.tp, cm.tp + cm.fn)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    return {"tpr": tpr, "fpr": _ratio(cm.fp, cm.fp + cm.tn), "precision": precision,
            "recall": tpr, "f_measure": f_measure(precision, tpr)}


def _weighted(cm: ConfusionMatrix) -> dict[str, float | None]:
    per_class = [(cm.tn + cm.fp, _positive_metrics(cm.flipped())),
                 (cm.tp + cm.fn, _positive_metrics(cm))]
    support = sum(s for s, _ in per_class)
    out = {}
    for name in METRICS:
        terms = [(s, m[name]) for s, m in per_class if s > 0]
        if support == 0 or any(v is None for _, v in terms):
            out[name] = None
        else:
            out[name] = sum(s * v for s, v in terms) / support
    return out


@dataclass(frozen=True)
class MetricsReport:
    confusion: ConfusionMatrix
    tpr: float | None
    fpr: float | None
    precision: float | None
    recall: float | None
    f_measure: float | None
    weighted: dict = field(default_factory=dict)
    folds: tuple[ConfusionMatrix, ...] = ()
    fold_macro: dict = field(default_factory=dict)
    build_time: float | None = None

    @property
    def undefined(self) -> tuple[str, ...]:
        return tuple(m for m in METRICS if getattr(self, m) is None)

    def metrics(self) -> dict[str, float | None]:
        return {m: getattr(self, m) for m in METRICS}


def compute_metrics(cm: ConfusionMatrix, build_time: float | None = None) -> MetricsReport:
    return MetricsReport(cm, **_positive_metrics(cm), weighted=_weighted(cm), build_time=build_time)


def _macro(folds: Sequence[ConfusionMatrix]) -> dict[str, float | None]:
    out = {}
    for name in METRICS:
        values = [v for cm in folds if (v := _positive_metrics(cm)[name]) is not None]
        out[name] = sum(values) / len(values) if values else None
    return out


def stratified_folds(y: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold index per instance.

    Each class is shuffled with ``default_rng(seed)`` (Goodware first) and
    dealt round-robin, continuing the deal across classes.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for c in range(len(CLASS_VALUES)):
        members = np.flatnonzero(y == c)
        if len(members) < k:
            raise StratificationInfeasible(
                f"class {CLASS_VALUES[c]} has {len(members)} instances, fewer than k={k}")
        members = members[rng.permutation(len(members))]
        folds[members] = (offset + np.arange(len(members))) % k
        offset += len(members)
    return folds


def cross_validate(dataset: Dataset, spec: ClassifierSpec, k: int = 10, seed: int = 1) -> MetricsReport:
    """Stratified k-fold CV; headline numbers come from the pooled matrix."""
    fold_of = stratified_folds(dataset.y, k, seed)
    matrices, times = [], []
    for f in range(k):
        test_idx = np.flatnonzero(fold_of == f)
        train_idx = np.flatnonzero(fold_of != f)
        model = train(dataset.subset(train_idx), spec)
        times.append(model.build_time)
        held = dataset.subset(test_idx)
        labels, _ = predict_dataset(model, held)
        matrices.append(ConfusionMatrix.from_predictions(held.y, labels))
    pooled = sum(matrices, ConfusionMatrix())
    report = compute_metrics(pooled, build_time=float(np.mean(times)))
    return replace(report, folds=tuple(matrices), fold_macro=_macro(matrices))


def evaluate_holdout(model: Model, test: Dataset) -> MetricsReport:
    labels, _ = predict_dataset(model, test)
    return compute_metrics(ConfusionMatrix.from_predictions(test.y, labels), model.build_time)


@dataclass(frozen=True)
class ResultRow:
    classifier: str
    mode: Mode
    protocol: str
    report: MetricsReport

    def record(self) -> dict:
        rec = {"classifier": self.classifier, "mode": self.mode.value, "protocol": self.protocol}
        rec.update(self.report.metrics())
        rec["build_time_s"] = self.report.build_time
        rec["weighted"] = dict(self.report.weighted)
        rec["confusion"] = self.report.confusion.as_dict()
        return rec


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[ResultRow, ...]
    classifiers: tuple[str, ...]
    summary_protocol: str = "holdout"

    def row(self, classifier: str, mode: Mode, protocol: str) -> ResultRow:
        for r in self.rows:
            if r.classifier == classifier and r.mode is Mode(mode) and r.protocol == protocol:
                return r
        raise KeyError((classifier, mode, protocol))

    def build_times(self) -> list[dict]:
        """Build-time comparison: the full-training-set model per mode."""
        return [{"classifier": c,
                 "full_s": self.row(c, Mode.FULL, "holdout").report.build_time,
                 "reduced_s": self.row(c, Mode.REDUCED, "holdout").report.build_time}
                for c in self.classifiers]

    def phase_table(self, mode: Mode, protocol: str) -> list[dict]:
        return [self.row(c, mode, protocol).record() for c in self.classifiers]

    def best_per_classifier(self) -> list[dict]:
        """Per classifier, the mode with higher TPR; equal TPR reads "With/Without"."""
        out = []
        for c in self.classifiers:
            full = self.row(c, Mode.FULL, self.summary_protocol).report
            reduced = self.row(c, Mode.REDUCED, self.summary_protocol).report
            if full.tpr == reduced.tpr:
                chosen, selection = full, "With/Without"
            elif reduced.tpr is not None and (full.tpr is None or reduced.tpr > full.tpr):
                chosen, selection = reduced, SELECTION_LABELS[Mode.REDUCED]
            else:
                chosen, selection = full, SELECTION_LABELS[Mode.FULL]
            rec = {"classifier": c, **chosen.metrics(), "feature_selection": selection}
            out.append(rec)
        return out

    def without_timings(self) -> ExperimentReport:
        rows = tuple(replace(r, report=replace(r.report, build_time=None)) for r in self.rows)
        return replace(self, rows=rows)

    def records(self) -> list[dict]:
        return [r.record() for r in self.rows]

    def to_json(self) -> str:
        doc = {"results": self.records(), "build_times": self.build_times(),
               "summary": self.best_per_classifier(), "summary_protocol": self.summary_protocol}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        weighted = [f"weighted_{m}" for m in METRICS]
        writer.writerow([*RECORD_FIELDS, *weighted, "tp", "fp", "tn", "fn"])
        for rec in self.records():
            writer.writerow([_csv_value(rec[f]) for f in RECORD_FIELDS]
                            + [_csv_value(rec["weighted"].get(m)) for m in METRICS]
                            + [rec["confusion"][x] for x in ("tp", "fp", "tn", "fn")])
        return buf.getvalue()

    def to_text(self) -> str:
        return "\n".join([render_build_times(self), render_phase_tables(self),
                          render_summary(self)])


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def pct(value: float | None) -> str:
    return "n/a" if value is None else f"{100 * value:.2f}"


def seconds(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    line = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    out = [line(header), line(["-" * w for w in widths])]
    out.extend(line(r) for r in rows)
    return "\n".join(out)


def render_build_times(report: ExperimentReport) -> str:
    n_full = len(FULL_FEATURES) + 1
    n_reduced = len(REDUCED_FEATURES) + 1
    header = ["Classifier", f"Without Feature Selection ({n_full} attributes)",
              f"Feature Selection ({n_reduced} attributes)"]
    rows = [[r["classifier"], seconds(r["full_s"]), seconds(r["reduced_s"])]
            for r in report.build_times()]
    return "Build time (seconds)\n" + _table(header, rows) + "\n"


def render_phase_tables(report: ExperimentReport) -> str:
    blocks = []
    header = ["Classifier", "TPR (%)", "FPR (%)", "Precision", "Recall", "F-measure"]
    for protocol in ("cv", "holdout"):
        for mode in (Mode.FULL, Mode.REDUCED):
            rows = [[r["classifier"], *(pct(r[m]) for m in METRICS)]
                    for r in report.phase_table(mode, protocol)]
            title = f"{MODE_TITLES[mode]} [{_protocol_title(protocol)}]"
            blocks.append(title + "\n" + _table(header, rows) + "\n")
    return "\n".join(blocks)


def _protocol_title(protocol: str) -> str:
    return "10-fold cross-validation" if protocol == "cv" else "supplied test set"


def render_summary(report: ExperimentReport) -> str:
    header = ["Classifier", "TPR (%)", "FPR (%)", "Precision", "Recall", "F-measure",
              "Feature selection"]
    rows = [[r["classifier"], *(pct(r[m]) for m in METRICS), r["feature_selection"]]
            for r in report.best_per_classifier()]
    return (f"Detection summary [{_protocol_title(report.summary_protocol)}]\n"
            + _table(header, rows) + "\n")


def run_experiment(train_set: Dataset, test_set: Dataset, specs: Sequence[ClassifierSpec],
                   seed: int = 1, k: int = 10) -> ExperimentReport:
    """Both phases (all attributes, then without packet counts), each with
    k-fold CV on ``train_set`` and re-evaluation on ``test_set``."""
    kinds = [s.kind for s in specs]
    if len(set(kinds)) != len(kinds):
        raise ValueError("each classifier kind may appear only once per experiment")
    rows = []
    for spec in specs:
        for mode in (Mode.FULL, Mode.REDUCED):
            tr = select_features(train_set, mode)
            te = select_features(test_set, mode)
            rows.append(ResultRow(spec.kind, mode, "cv", cross_validate(tr, spec, k, seed)))
            model = train(tr, spec)
            rows.append(ResultRow(spec.kind, mode, "holdout", evaluate_holdout(model, te)))
    return ExperimentReport(tuple(rows), tuple(s.kind for s in specs))
