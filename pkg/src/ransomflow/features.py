"""Cleaning, schema selection and grouped splitting of conversation data."""
from __future__ import annotations

import hashlib
import re
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .conversations import Conversation
from .errors import InvalidAddress, IrreversibleProjection, SchemaMismatch, SplitInfeasible

CLASS_ATTRIBUTE = "Label"
CLASS_VALUES = ("Goodware", "Malware")
GOODWARE, MALWARE = 0, 1

FULL_FEATURES = (
    "Protocol", "Address A", "Port A", "Address B", "Port B",
    "Packets A->B", "Bytes A->B", "Packets B->A", "Bytes B->A",
)
PACKET_COUNT_FEATURES = ("Packets A->B", "Packets B->A")
REDUCED_FEATURES = tuple(f for f in FULL_FEATURES if f not in PACKET_COUNT_FEATURES)

DNS_PORT = 53
DEFAULT_TRAIN_FRACTION = 0.6091

_DOTTED = re.compile(r"(\d{1,3})\.(\d{1,3})\.(\d{1,3})\.(\d{1,3})", re.ASCII)


class Mode(str, Enum):
    FULL = "full"
    REDUCED = "reduced"


def ip_to_decimal(dotted: str) -> int:
    """``"a.b.c.d"`` -> ``a*2**24 + b*2**16 + c*2**8 + d``."""
    m = _DOTTED.fullmatch(dotted) if isinstance(dotted, str) else None
    if m is None:
        raise InvalidAddress(f"not a dotted IPv4 address: {dotted!r}")
    value = 0
    for octet in m.groups():
        o = int(octet)
        if o > 255:
            raise InvalidAddress(f"octet out of range in {dotted!r}")
        value = (value << 8) | o
    return value


def decimal_to_ip(value: int) -> str:
    if not 0 <= value < 1 << 32:
        raise InvalidAddress(f"not a 32-bit address: {value!r}")
    return ".".join(str((value >> s) & 0xFF) for s in (24, 16, 8, 0))


class CleanRow(NamedTuple):
    """One cleaned conversation: label, the nine model features, and its capture."""

    label: str | None
    protocol: int
    address_a: int
    port_a: int
    address_b: int
    port_b: int
    packets_ab: int
    bytes_ab: int
    packets_ba: int
    bytes_ba: int
    group: str

    @property
    def features(self) -> tuple[int, ...]:
        return self[1:10]


def _as_decimal(address) -> int:
    return address if isinstance(address, int) else ip_to_decimal(address)


def clean(rows: Iterable[Conversation | CleanRow],
          labels: Mapping[str, str] | None = None) -> list[CleanRow]:
    """Drop unusable records and project onto the model columns.

    Rows whose Address A is 0.0.0.0 or whose Port B is 53 (DNS) are
    removed. Totals, Rel Start and Duration are dropped and addresses
    become integers. ``labels`` maps a capture id to its class; rows that
    are already clean keep their own label unless overridden.
    """
    out = []
    for row in rows:
        if isinstance(row, CleanRow):
            group = row.group
            label = row.label
        else:
            group = row.source_capture
            label = None
        if labels is not None and group in labels:
            label = labels[group]
        address_a = _as_decimal(row.address_a)
        if address_a == 0 or row.port_b == DNS_PORT:
            continue
        out.append(CleanRow(label, row.protocol, address_a, row.port_a,
                            _as_decimal(row.address_b), row.port_b,
                            row.packets_ab, row.bytes_ab, row.packets_ba, row.bytes_ba,
                            group))
    return out


class Instance(NamedTuple):
    label: str
    attributes: tuple[float, ...]
    group: str
    features: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labelled, grouped feature matrix. Immutable after construction.

    ``y`` holds class indices into :data:`CLASS_VALUES`; ``groups`` names
    the capture each row came from.
    """

    features: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    groups: tuple[str, ...]
    relation: str = "ransomware-conversations"
    mode: Mode | None = field(default=None)

    def __post_init__(self):
        features = tuple(self.features)
        X = np.array(self.X, dtype=np.float64, copy=True).reshape(-1, len(features))
        y = np.array(self.y, dtype=np.int64, copy=True).reshape(-1)
        groups = tuple(str(g) for g in self.groups)
        if not (X.shape[0] == y.shape[0] == len(groups)):
            raise ValueError("X, y and groups must have the same length")
        if not np.isfinite(X).all():
            raise SchemaMismatch("attribute values must be finite (missing values are not supported)")
        if (X < 0).any():
            raise ValueError("attribute values must be non-negative")
        if y.size and (y.min() < 0 or y.max() >= len(CLASS_VALUES)):
            raise ValueError("class index out of range")
        X.flags.writeable = False
        y.flags.writeable = False
        mode = self.mode
        if mode is None:
            mode = {FULL_FEATURES: Mode.FULL, REDUCED_FEATURES: Mode.REDUCED}.get(features)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "mode", Mode(mode) if mode is not None else None)

    def __len__(self) -> int:
        return self.y.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self.instance(i)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.features == other.features and self.relation == other.relation
                and self.mode == other.mode and self.groups == other.groups
                and np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y))

    __hash__ = None

    @property
    def schema(self) -> tuple[tuple[str, object], ...]:
        """Attribute declarations, class attribute first."""
        return ((CLASS_ATTRIBUTE, CLASS_VALUES),) + tuple((f, "REAL") for f in self.features)

    @property
    def n_attributes(self) -> int:
        return len(self.features) + 1

    @property
    def labels(self) -> list[str]:
        return [CLASS_VALUES[c] for c in self.y]

    @property
    def fingerprint(self) -> str:
        return schema_fingerprint(self.features)

    def instance(self, i: int) -> Instance:
        return Instance(CLASS_VALUES[self.y[i]], tuple(self.X[i].tolist()), self.groups[i], self.features)

    def subset(self, indices: Sequence[int] | np.ndarray) -> Dataset:
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features, self.X[idx], self.y[idx],
                       tuple(self.groups[i] for i in idx), self.relation, self.mode)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=len(CLASS_VALUES))


def schema_fingerprint(features: Sequence[str]) -> str:
    text = "\x1f".join((CLASS_ATTRIBUTE, *CLASS_VALUES, "|", *features))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def build_dataset(rows: Sequence[CleanRow], relation: str = "ransomware-conversations") -> Dataset:
    """FULL-mode dataset from cleaned rows; every row needs a label."""
    y = []
    for row in rows:
        if row.label not in CLASS_VALUES:
            raise ValueError(f"row from capture {row.group!r} has no valid label: {row.label!r}")
        y.append(CLASS_VALUES.index(row.label))
    X = np.array([row.features for row in rows], dtype=np.float64).reshape(-1, len(FULL_FEATURES))
    return Dataset(FULL_FEATURES, X, y, tuple(r.group for r in rows), relation, Mode.FULL)


def select_features(dataset: Dataset, mode: Mode | str) -> Dataset:
    mode = Mode(mode)
    if dataset.mode is mode:
        return dataset
    if dataset.mode is not Mode.FULL:
        raise IrreversibleProjection(f"cannot derive {mode.value} attributes from a {dataset.mode} dataset")
    keep = [i for i, f in enumerate(dataset.features) if f not in PACKET_COUNT_FEATURES]
    return Dataset(tuple(dataset.features[i] for i in keep), dataset.X[:, keep], dataset.y,
                   dataset.groups, dataset.relation, Mode.REDUCED)


class SplitResult(NamedTuple):
    train: Dataset
    test: Dataset
    train_fraction: float


def _group_classes(dataset: Dataset) -> dict[str, int]:
    owner: dict[str, int] = {}
    for g, c in zip(dataset.groups, dataset.y.tolist()):
        if owner.setdefault(g, c) != c:
            raise ValueError(f"group {g!r} mixes both classes")
    return owner


def grouped_split(dataset: Dataset, train_fraction: float = DEFAULT_TRAIN_FRACTION,
                  seed: int = 1) -> SplitResult:
    """Split by capture so that no group straddles train and test.

    Within each class the groups are shuffled (``default_rng([seed,
    class_index])``) and taken greedily into train until the running
    count reaches the target; the group that would cross the target is
    kept only if that lands closer to it. Goodware is assigned first;
    Malware's target absorbs Goodware's rounding so the overall
    instance fraction tracks ``train_fraction``.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    n = len(dataset)
    owner = _group_classes(dataset)
    sizes: dict[str, int] = {}
    for g in dataset.groups:
        sizes[g] = sizes.get(g, 0) + 1
    overall_target = train_fraction * n
    train_groups: set[str] = set()
    taken = 0
    for c in range(len(CLASS_VALUES)):
        members = sorted(g for g, k in owner.items() if k == c)
        if not members:
            continue
        n_class = sum(sizes[g] for g in members)
        if c == len(CLASS_VALUES) - 1:
            target = min(max(overall_target - taken, 0.0), float(n_class))
        else:
            target = train_fraction * n_class
        order = np.random.default_rng([seed, c]).permutation(len(members))
        count = 0
        for i in order:
            if count >= target:
                break
            s = sizes[members[i]]
            if count + s >= target:
                if count + s - target <= target - count:
                    train_groups.add(members[i])
                    count += s
                break
            train_groups.add(members[i])
            count += s
        taken += count
    if any(s > overall_target for s in sizes.values()):
        warnings.warn("a single capture holds more than the requested train fraction; "
                      "split is best-effort", SplitInfeasible, stacklevel=2)
    train_idx = [i for i, g in enumerate(dataset.groups) if g in train_groups]
    test_idx = [i for i, g in enumerate(dataset.groups) if g not in train_groups]
    if n and (not train_idx or not test_idx):
        warnings.warn(f"split leaves an empty {'test' if train_idx else 'train'} set",
                      SplitInfeasible, stacklevel=2)
    achieved = len(train_idx) / n if n else 0.0
    return SplitResult(dataset.subset(train_idx), dataset.subset(test_idx), achieved)
