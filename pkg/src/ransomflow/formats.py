"""ARFF and CSV serialization of :class:`~ransomflow.features.Dataset`.

Both writers are byte-stable: integral values are written without a
decimal point and other values with Python's shortest round-trip repr.
Capture ids travel with the data: as a trailing ``Group`` column in CSV
and as ``% group <count> <id>`` comment runs in the ARFF header, which
ARFF readers ignore.
"""
from __future__ import annotations

import csv
import io
import os
import re

import numpy as np

from .errors import IoError, ParseError
from .features import CLASS_ATTRIBUTE, CLASS_VALUES, Dataset

GROUP_COLUMN = "Group"
_PLAIN = re.compile(r"[A-Za-z0-9_.\-]+")
_GROUP_RUN = re.compile(r"%\s*group\s+(\d+)(?: (.*))?")
_NUMERIC_TYPES = {"real", "numeric", "integer"}


def format_number(value: float) -> str:
    v = float(value)
    if v.is_integer() and abs(v) < 2 ** 53:
        return str(int(v))
    return repr(v)


def _quote(name: str) -> str:
    if _PLAIN.fullmatch(name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _group_runs(groups):
    runs = []
    for g in groups:
        if runs and runs[-1][1] == g:
            runs[-1][0] += 1
        else:
            runs.append([1, g])
    return runs


def dumps_arff(dataset: Dataset) -> str:
    lines = [f"@RELATION {_quote(dataset.relation)}", ""]
    lines.append(f"@ATTRIBUTE {CLASS_ATTRIBUTE} {{{','.join(CLASS_VALUES)}}}")
    for name in dataset.features:
        lines.append(f"@ATTRIBUTE {_quote(name)} REAL")
    lines.append("")
    for count, group in _group_runs(dataset.groups):
        if "\n" in group or "\r" in group:
            raise ValueError(f"group id contains a line break: {group!r}")
        lines.append(f"% group {count} {group}")
    lines.append("@DATA")
    for label, row in zip(dataset.y.tolist(), dataset.X.tolist()):
        lines.append(",".join([CLASS_VALUES[label], *map(format_number, row)]))
    return "\n".join(lines) + "\n"


def export_arff(dataset: Dataset, path) -> None:
    _write_text(path, dumps_arff(dataset))


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {os.fspath(path)}: {exc.strerror}") from exc


def _read_text(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {os.fspath(path)}: {exc.strerror}") from exc


def _take_name(text: str, lineno: int, path) -> tuple[str, str]:
    """Split a possibly quoted leading name off ``text``."""
    text = text.lstrip()
    if text[:1] in ("'", '"'):
        quote = text[0]
        out = []
        i = 1
        while i < len(text):
            ch = text[i]
            if ch == "\\" and i + 1 < len(text):
                out.append(text[i + 1])
                i += 2
                continue
            if ch == quote:
                return "".join(out), text[i + 1:]
            out.append(ch)
            i += 1
        raise ParseError("unterminated quoted name", lineno, path)
    parts = text.split(None, 1)
    if not parts:
        raise ParseError("missing name", lineno, path)
    return parts[0], parts[1] if len(parts) > 1 else ""


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return token[1:-1]
    return token


def loads_arff(text: str, path=None) -> Dataset:
    relation = None
    attributes: list[tuple[str, object]] = []
    group_runs: list[tuple[int, str]] = []
    lines = text.splitlines()
    lineno = 0
    in_data = False
    rows_X: list[list[float]] = []
    rows_y: list[int] = []
    class_pos = None
    allowed: tuple[str, ...] = ()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not in_data:
            if line.startswith("%"):
                m = _GROUP_RUN.fullmatch(raw.rstrip("\r\n"))
                if m:
                    group_runs.append((int(m.group(1)), m.group(2) or ""))
                continue
            if not line:
                continue
            keyword = line.split(None, 1)[0].lower()
            if keyword == "@relation":
                relation, _ = _take_name(line[len("@relation"):], lineno, path)
            elif keyword == "@attribute":
                name, rest = _take_name(line[len("@attribute"):], lineno, path)
                rest = rest.strip()
                if rest.startswith("{"):
                    if not rest.endswith("}"):
                        raise ParseError("malformed nominal declaration", lineno, path)
                    values = tuple(_unquote(v) for v in rest[1:-1].split(","))
                    attributes.append((name, values))
                elif rest.lower() in _NUMERIC_TYPES:
                    attributes.append((name, "REAL"))
                else:
                    raise ParseError(f"unknown attribute type {rest!r} for {name!r}", lineno, path)
            elif keyword == "@data":
                nominal = [i for i, (_, t) in enumerate(attributes) if isinstance(t, tuple)]
                if len(nominal) != 1:
                    raise ParseError("exactly one nominal (class) attribute is required", lineno, path)
                class_pos = nominal[0]
                allowed = attributes[class_pos][1]
                bad = [v for v in allowed if v not in CLASS_VALUES]
                if bad:
                    raise ParseError(f"class values must be drawn from {CLASS_VALUES}, got {bad}",
                                     lineno, path)
                in_data = True
            else:
                raise ParseError(f"unexpected header line {line!r}", lineno, path)
            continue
        if not line or line.startswith("%"):
            continue
        if line.startswith("{"):
            raise ParseError("sparse ARFF rows are not supported", lineno, path)
        cells = line.split(",")
        if len(cells) != len(attributes):
            raise ParseError(f"expected {len(attributes)} values, found {len(cells)}", lineno, path)
        values = []
        label = None
        for i, cell in enumerate(cells):
            cell = _unquote(cell)
            if cell == "?":
                raise ParseError("missing values are not supported", lineno, path)
            if i == class_pos:
                if cell not in allowed:
                    raise ParseError(f"undeclared nominal value {cell!r}", lineno, path)
                label = CLASS_VALUES.index(cell)
            else:
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"not a number: {cell!r}", lineno, path) from None
        rows_X.append(values)
        rows_y.append(label)
    if not in_data:
        raise ParseError("no @DATA section", lineno, path)
    if relation is None:
        raise ParseError("no @RELATION declaration", 1, path)
    features = tuple(name for i, (name, _) in enumerate(attributes) if i != class_pos)
    groups = _expand_runs(group_runs, len(rows_y), path)
    try:
        return Dataset(features, np.array(rows_X, dtype=np.float64).reshape(-1, len(features)),
                       rows_y, groups, relation)
    except ValueError as exc:
        raise ParseError(str(exc), None, path) from exc


def _expand_runs(runs, n, path) -> tuple[str, ...]:
    if not runs:
        return ("",) * n
    groups = tuple(g for count, g in runs for _ in range(count))
    if len(groups) != n:
        raise ParseError(f"group annotations cover {len(groups)} rows, data has {n}", None, path)
    return groups


def import_arff(path) -> Dataset:
    return loads_arff(_read_text(path), os.fspath(path))


def dumps_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([CLASS_ATTRIBUTE, *dataset.features, GROUP_COLUMN])
    for label, row, group in zip(dataset.y.tolist(), dataset.X.tolist(), dataset.groups):
        writer.writerow([CLASS_VALUES[label], *map(format_number, row), group])
    return buf.getvalue()


def export_csv(dataset: Dataset, path) -> None:
    _write_text(path, dumps_csv(dataset))


def loads_csv(text: str, path=None, relation: str = "ransomware-conversations") -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file, header row required", 1, path) from None
    if CLASS_ATTRIBUTE not in header:
        raise ParseError(f"header lacks a {CLASS_ATTRIBUTE} column", 1, path)
    class_pos = header.index(CLASS_ATTRIBUTE)
    group_pos = header.index(GROUP_COLUMN) if GROUP_COLUMN in header else None
    feature_pos = [i for i in range(len(header)) if i not in (class_pos, group_pos)]
    X, y, groups = [], [], []
    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", lineno, path)
        if row[class_pos] not in CLASS_VALUES:
            raise ParseError(f"undeclared class value {row[class_pos]!r}", lineno, path)
        y.append(CLASS_VALUES.index(row[class_pos]))
        try:
            X.append([float(row[i]) for i in feature_pos])
        except ValueError:
            raise ParseError("non-numeric attribute value", lineno, path) from None
        groups.append(row[group_pos] if group_pos is not None else "")
    features = tuple(header[i] for i in feature_pos)
    try:
        return Dataset(features, np.array(X, dtype=np.float64).reshape(-1, len(features)), y,
                       groups, relation)
    except ValueError as exc:
        raise ParseError(str(exc), None, path) from exc


def import_csv(path, relation: str = "ransomware-conversations") -> Dataset:
    return loads_csv(_read_text(path), os.fspath(path), relation)


def save_dataset(dataset: Dataset, path) -> None:
    """Write ARFF or CSV depending on the file extension (default ARFF)."""
    if os.fspath(path).lower().endswith(".csv"):
        export_csv(dataset, path)
    else:
        export_arff(dataset, path)


def load_dataset(path) -> Dataset:
    if os.fspath(path).lower().endswith(".csv"):
        return import_csv(path)
    return import_arff(path)
