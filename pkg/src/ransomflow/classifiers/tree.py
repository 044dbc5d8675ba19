"""C4.5-style decision trees over numeric attributes.

The same grower backs the pruned single tree and the randomized,
unpruned trees inside the forest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .. import _kernels
from ..errors import DegenerateDistribution

MIN_GAIN = 1e-12


def entropy(class_counts) -> float:
    """Shannon entropy in bits of a class-count vector."""
    counts = [float(c) for c in class_counts]
    if any(c < 0 for c in counts):
        raise DegenerateDistribution("class counts must be non-negative")
    total = sum(counts)
    if total <= 0:
        raise DegenerateDistribution("all class counts are zero")
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return h


def nlogn_table(n: int) -> np.ndarray:
    """``table[i] = i * log2(i)`` for 0 <= i <= n (0 for i = 0)."""
    table = np.zeros(n + 1)
    for i in range(2, n + 1):
        table[i] = i * math.log2(i)
    return table


def _midpoint(lo: float, hi: float) -> float:
    mid = (lo + hi) / 2.0
    if not lo <= mid < hi:
        mid = lo
    return mid


def add_errs(n: float, e: float, cf: float) -> float:
    """Extra errors expected at confidence ``cf`` on top of ``e`` observed in ``n``.

    Upper confidence bound of the binomial error rate, as used by C4.5's
    pessimistic pruning.
    """
    if cf > 0.5:
        raise ValueError("confidence factor must be <= 0.5")
    if e < 1:
        base = n * (1.0 - cf ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (add_errs(n, 1, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1.0 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


@dataclass
class Tree:
    """Flat binary tree. Internal nodes send ``x[feature] <= threshold`` left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def distribution(self, X: np.ndarray) -> np.ndarray:
        counts = self.counts[self.apply(X)].astype(np.float64)
        totals = counts.sum(axis=1, keepdims=True)
        return counts / np.where(totals > 0, totals, 1.0)

    def to_dict(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(np.asarray(d["feature"], dtype=np.int64),
                   np.asarray(d["threshold"], dtype=np.float64),
                   np.asarray(d["left"], dtype=np.int64),
                   np.asarray(d["right"], dtype=np.int64),
                   np.asarray(d["counts"], dtype=np.int64).reshape(-1, 2))


def _evaluate(X, y, idx, attr, n_classes, min_leaf, nlogn):
    vals = X[idx, attr]
    order = np.argsort(vals, kind="stable")
    sv = np.ascontiguousarray(vals[order])
    sl = np.ascontiguousarray(y[idx][order])
    gain, pos = _kernels.best_threshold(sv, sl, n_classes, min_leaf, nlogn)
    if pos < 0:
        return None
    n = len(idx)
    n_left = pos + 1
    split_info = entropy((n_left, n - n_left))
    ratio = gain / split_info if gain > 0 and split_info > 0 else 0.0
    return attr, gain, ratio, _midpoint(sv[pos], sv[pos + 1])


def _choose(cands, criterion):
    if criterion == "gain":
        return max(cands, key=lambda c: c[1])
    positive = [c for c in cands if c[1] > MIN_GAIN]
    if not positive:
        return max(cands, key=lambda c: c[2])
    mean_gain = sum(c[1] for c in cands) / len(cands)
    eligible = [c for c in positive if c[1] >= mean_gain - MIN_GAIN] or positive
    return max(eligible, key=lambda c: c[2])


def grow_tree(X: np.ndarray, y: np.ndarray, *, min_leaf: int = 2, criterion: str = "gain_ratio",
              max_features: int | None = None, rng: np.random.Generator | None = None,
              zero_gain_splits: bool = False, n_classes: int = 2) -> Tree:
    """Top-down induction with binary numeric splits.

    ``criterion="gain_ratio"`` picks the best gain ratio among attributes
    whose gain is at least the mean gain of all valid candidates;
    ``"gain"`` picks the best information gain. With ``max_features`` a
    random subset of that many attributes is tried per node, falling
    back to further attributes (in the same random order) until one
    yields positive gain. ``zero_gain_splits`` lets impure nodes keep
    splitting when no positive-gain cut exists.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, n_features = X.shape
    nlogn = nlogn_table(n)
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[idx], minlength=n_classes))
        return len(feature) - 1

    root_idx = np.arange(n)
    stack = [(root_idx, new_node(root_idx))]
    while stack:
        idx, node = stack.pop()
        c = counts[node]
        if np.count_nonzero(c) <= 1 or len(idx) < 2 * min_leaf:
            continue
        if max_features is None:
            cands = [r for a in range(n_features)
                     if (r := _evaluate(X, y, idx, a, n_classes, min_leaf, nlogn)) is not None]
        else:
            perm = rng.permutation(n_features)
            cands = []
            for k, a in enumerate(perm):
                if k >= max_features and any(r[1] > MIN_GAIN for r in cands):
                    break
                r = _evaluate(X, y, idx, int(a), n_classes, min_leaf, nlogn)
                if r is not None:
                    cands.append(r)
        if not cands:
            continue
        best = _choose(cands, criterion)
        if best[1] <= MIN_GAIN and not zero_gain_splits:
            continue
        attr, _, _, thr = best
        mask = X[idx, attr] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node] = attr
        threshold[node] = thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is grown (and numbered) first
        stack.append((ri, right[node]))
        stack.append((li, left[node]))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(counts, dtype=np.int64).reshape(-1, n_classes))


def prune(tree: Tree, confidence: float = 0.25) -> Tree:
    """Pessimistic-error subtree replacement, bottom-up."""
    feature = tree.feature.copy()

    def leaf_estimate(node):
        c = tree.counts[node]
        total = int(c.sum())
        if total == 0:
            return 0.0
        errors = total - int(c.max())
        return errors + add_errs(total, errors, confidence)

    # children always carry larger indices than their parent
    estimate = np.zeros(tree.n_nodes)
    for node in range(tree.n_nodes - 1, -1, -1):
        as_leaf = leaf_estimate(node)
        if feature[node] < 0:
            estimate[node] = as_leaf
            continue
        subtree = estimate[tree.left[node]] + estimate[tree.right[node]]
        if as_leaf <= subtree + 0.1:
            feature[node] = -1
            estimate[node] = as_leaf
        else:
            estimate[node] = subtree
    return _compact(tree, feature)


def _compact(tree: Tree, feature: np.ndarray) -> Tree:
    keep, remap = [], {}
    stack = [0]
    while stack:
        node = stack.pop()
        remap[node] = len(keep)
        keep.append(node)
        if feature[node] >= 0:
            stack.append(tree.right[node])
            stack.append(tree.left[node])
    f = np.array([feature[k] for k in keep], dtype=np.int64)
    left = np.array([remap[tree.left[k]] if feature[k] >= 0 else -1 for k in keep], dtype=np.int64)
    right = np.array([remap[tree.right[k]] if feature[k] >= 0 else -1 for k in keep], dtype=np.int64)
    thr = np.where(f >= 0, tree.threshold[keep], 0.0)
    return Tree(f, thr, left, right, tree.counts[keep])
