"""Command-line front end.

Exit status: 0 success, 1 usage error, 2 data or format error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace
from concurrent.futures import ProcessPoolExecutor

from . import classifiers as clf
from .conversations import extract_conversations
from .errors import RansomflowError
from .evaluation import (METRICS, RECORD_FIELDS, MetricsReport, cross_validate, evaluate_holdout,
                         pct, run_experiment, seconds)
from .features import DEFAULT_TRAIN_FRACTION, Mode, build_dataset, clean, grouped_split, select_features
from .formats import load_dataset, save_dataset
from .synth import generate_corpus, goodware_profile, malware_profile, overlapping_profiles, read_manifest

DEFAULT_SEED = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _kind(value: str) -> str:
    try:
        return clf.canonical_kind(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fraction(value: str) -> float:
    f = float(value)
    if not 0.0 < f < 1.0:
        raise argparse.ArgumentTypeError("must lie strictly between 0 and 1")
    return f


def _positive(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ransomflow", description="Conversation-based ransomware traffic detection.")
    parser.add_argument("--progress", action="store_true", help="report progress on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="pcaps -> cleaned FULL dataset (.arff or .csv)")
    p.add_argument("pcaps", nargs="+")
    p.add_argument("--labels", required=True, help="CSV manifest with file,label columns")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--relation", default="ransomware-conversations")
    p.add_argument("--jobs", type=_positive, default=1)

    p = sub.add_parser("split", help="grouped train/test split by capture")
    p.add_argument("dataset")
    p.add_argument("--train-fraction", type=_fraction, default=DEFAULT_TRAIN_FRACTION)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)

    p = sub.add_parser("train", help="train one classifier and save the model")
    p.add_argument("dataset")
    p.add_argument("--classifier", type=_kind, required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.FULL.value)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("eval", help="evaluate a saved model on a test dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation")
    p.add_argument("dataset")
    p.add_argument("--classifier", type=_kind, required=True)
    p.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.FULL.value)
    p.add_argument("--k", type=_positive, default=10)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--timings", action="store_true", help="include measured build times")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("experiment", help="two-phase protocol over all classifiers")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--classifiers", default="all", help="'all' or a comma-separated list")
    p.add_argument("--k", type=_positive, default=10)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--timings", action="store_true", help="include measured build times")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("synth", help="generate a labelled synthetic capture corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--captures-per-class", type=_positive, default=10)
    p.add_argument("--goodware", type=_positive, help="override the goodware capture count")
    p.add_argument("--malware", type=_positive, help="override the malware capture count")
    p.add_argument("--profile", choices=("separable", "overlapping"), default="separable")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    return parser


def _log(args, message: str) -> None:
    if args.progress:
        print(message, file=sys.stderr)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def _extract_one(path: str):
    return extract_conversations(path)


def cmd_extract(args) -> None:
    manifest = read_manifest(args.labels)
    labels = {}
    for path in args.pcaps:
        name = os.path.basename(path)
        if name not in manifest:
            raise RansomflowError(f"{path}: not listed in manifest {args.labels}")
        labels[os.path.splitext(name)[0]] = manifest[name]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            per_capture = list(pool.map(_extract_one, args.pcaps))
    else:
        per_capture = []
        for i, path in enumerate(args.pcaps, 1):
            per_capture.append(_extract_one(path))
            _log(args, f"[{i}/{len(args.pcaps)}] {path}")
    rows = clean((c for convs in per_capture for c in convs), labels)
    dataset = build_dataset(rows, args.relation)
    save_dataset(dataset, args.output)
    _log(args, f"wrote {len(dataset)} instances to {args.output}")


def cmd_split(args) -> None:
    dataset = load_dataset(args.dataset)
    result = grouped_split(dataset, args.train_fraction, args.seed)
    save_dataset(result.train, args.train_out)
    save_dataset(result.test, args.test_out)
    _log(args, f"train {len(result.train)} / test {len(result.test)} "
               f"(train fraction {result.train_fraction:.4f})")


def cmd_train(args) -> None:
    dataset = select_features(load_dataset(args.dataset), args.mode)
    model = clf.train(dataset, clf.ClassifierSpec(args.classifier, seed=args.seed))
    clf.save_model(model, args.output)
    _log(args, f"trained {model.kind} in {model.build_time:.3f}s")


def _single_report(report: MetricsReport, classifier: str, mode: str, protocol: str, fmt: str) -> str:
    rec = {"classifier": classifier, "mode": mode, "protocol": protocol, **report.metrics(),
           "build_time_s": report.build_time}
    if fmt == "json":
        rec["weighted"] = dict(report.weighted)
        rec["confusion"] = report.confusion.as_dict()
        if report.folds:
            rec["folds"] = [cm.as_dict() for cm in report.folds]
            rec["fold_macro"] = dict(report.fold_macro)
        return json.dumps(rec, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RECORD_FIELDS)
        writer.writerow(["" if rec[f] is None else rec[f] for f in RECORD_FIELDS])
        return buf.getvalue()
    cm = report.confusion
    lines = [f"{classifier} [{mode}, {protocol}]",
             f"TP={cm.tp} FP={cm.fp} TN={cm.tn} FN={cm.fn}"]
    lines += [f"{m:<10} {pct(getattr(report, m))}" for m in METRICS]
    lines += [f"weighted {m:<10} {pct(report.weighted.get(m))}" for m in METRICS]
    lines.append(f"build time (s) {seconds(report.build_time)}")
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> None:
    model = clf.load_model(args.model)
    test = load_dataset(args.test)
    if test.mode is Mode.FULL and len(model.features) < len(test.features):
        test = select_features(test, Mode.REDUCED)
    report = evaluate_holdout(model, test)
    mode = test.mode.value if test.mode else "custom"
    _write(args.output, _single_report(report, model.kind, mode, "holdout", args.format))


def cmd_cv(args) -> None:
    dataset = select_features(load_dataset(args.dataset), args.mode)
    report = cross_validate(dataset, clf.ClassifierSpec(args.classifier, seed=args.seed), args.k, args.seed)
    if not args.timings:
        report = replace(report, build_time=None)
    _write(args.output, _single_report(report, args.classifier, args.mode, "cv", args.format))


def cmd_experiment(args) -> None:
    train_set = load_dataset(args.train)
    test_set = load_dataset(args.test)
    if args.classifiers.strip().lower() == "all":
        kinds = list(clf.KINDS)
    else:
        try:
            kinds = [clf.canonical_kind(k) for k in args.classifiers.split(",") if k.strip()]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    specs = [clf.ClassifierSpec(k, seed=args.seed) for k in kinds]
    report = run_experiment(train_set, test_set, specs, args.seed, args.k)
    if not args.timings:
        report = report.without_timings()
    os.makedirs(args.out_dir, exist_ok=True)
    _write(os.path.join(args.out_dir, "report.txt"), report.to_text())
    _write(os.path.join(args.out_dir, "report.csv"), report.to_csv())
    _write(os.path.join(args.out_dir, "report.json"), report.to_json())
    _log(args, f"wrote reports to {args.out_dir}")


def cmd_synth(args) -> None:
    if args.profile == "separable":
        good, bad = goodware_profile(), malware_profile()
    else:
        good, bad = overlapping_profiles()
    counts = (args.goodware or args.captures_per_class, args.malware or args.captures_per_class)
    paths, manifest = generate_corpus(good, bad, counts, args.seed, args.out_dir)
    _log(args, f"wrote {len(paths)} captures and {manifest}")


COMMANDS = {"extract": cmd_extract, "split": cmd_split, "train": cmd_train, "eval": cmd_eval,
            "cv": cmd_cv, "experiment": cmd_experiment, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (RansomflowError, OSError, ValueError) as exc:
        print(f"ransomflow: error: {exc}", file=sys.stderr)
        return 2
    return 0


run = main

if __name__ == "__main__":
    sys.exit(main())
