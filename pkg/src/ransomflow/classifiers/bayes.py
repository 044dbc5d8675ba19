"""Naive Bayes over equal-width discretized attributes with additive smoothing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def smoothed_prior(class_counts, alpha: float) -> np.ndarray:
    counts = np.asarray(class_counts, dtype=np.float64)
    return (counts + alpha) / (counts.sum() + alpha * len(counts))


@dataclass
class NaiveBayesModel:
    """``cuts[a]`` are the interior bin edges of attribute ``a``; a value equal
    to an edge falls in the lower bin. Constant attributes get a single bin."""

    cuts: list[np.ndarray]
    counts: list[np.ndarray]
    class_counts: np.ndarray
    alpha: float

    @classmethod
    def fit(cls, X, y, bins: int = 10, alpha: float = 0.5, n_classes: int = 2) -> NaiveBayesModel:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        cuts, counts = [], []
        for a in range(X.shape[1]):
            lo, hi = X[:, a].min(), X[:, a].max()
            if hi > lo:
                edges = lo + (hi - lo) * np.arange(1, bins) / bins
            else:
                edges = np.zeros(0)
            b = np.searchsorted(edges, X[:, a], side="left")
            table = np.zeros((len(edges) + 1, n_classes), dtype=np.int64)
            np.add.at(table, (b, y), 1)
            cuts.append(edges)
            counts.append(table)
        return cls(cuts, counts, np.bincount(y, minlength=n_classes), alpha)

    def log_joint(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        a = self.alpha
        nc = self.class_counts.astype(np.float64)
        out = np.tile(np.log(smoothed_prior(nc, a)), (X.shape[0], 1))
        for j, (edges, table) in enumerate(zip(self.cuts, self.counts)):
            b = np.searchsorted(edges, X[:, j], side="left")
            cond = (table + a) / (nc + a * table.shape[0])
            out += np.log(cond[b])
        return out

    def distribution(self, X: np.ndarray) -> np.ndarray:
        lj = self.log_joint(X)
        lj -= lj.max(axis=1, keepdims=True)
        p = np.exp(lj)
        return p / p.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {"cuts": [c.tolist() for c in self.cuts], "counts": [t.tolist() for t in self.counts],
                "class_counts": self.class_counts.tolist(), "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: dict) -> NaiveBayesModel:
        n_classes = len(d["class_counts"])
        return cls([np.asarray(c, dtype=np.float64) for c in d["cuts"]],
                   [np.asarray(t, dtype=np.int64).reshape(-1, n_classes) for t in d["counts"]],
                   np.asarray(d["class_counts"], dtype=np.int64), float(d["alpha"]))
