"""Bagged random-subspace trees with majority voting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tree import Tree, grow_tree


def subspace_size(n_features: int) -> int:
    """Attributes tried per node: floor(log2 F) + 1."""
    return int(math.floor(math.log2(n_features))) + 1


def derive_sub_seeds(seed: int, n_trees: int) -> list[int]:
    """Per-tree seeds, one 32-bit word each from ``SeedSequence(seed)``."""
    return np.random.SeedSequence(seed).generate_state(n_trees, dtype=np.uint32).tolist()


def grow_random_tree(X, y, seed: int, max_features: int, bootstrap: bool = True) -> Tree:
    """One forest member: bootstrap sample (if enabled) then an unpruned
    random-subspace tree, both driven by ``default_rng(seed)``."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(seed)
    if bootstrap:
        idx = rng.integers(0, len(y), len(y))
        X, y = X[idx], y[idx]
    return grow_tree(X, y, min_leaf=1, criterion="gain", max_features=max_features, rng=rng)


def tree_votes(tree: Tree, X: np.ndarray) -> np.ndarray:
    # argmax takes the lower class index on ties
    return tree.counts[tree.apply(X)].argmax(axis=1)


@dataclass
class ForestModel:
    trees: list[Tree]

    def distribution(self, X: np.ndarray, n_classes: int = 2) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros((X.shape[0], n_classes))
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            np.add.at(votes, (rows, tree_votes(tree, X)), 1.0)
        return votes / len(self.trees)

    def to_dict(self) -> dict:
        return {"trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> ForestModel:
        return cls([Tree.from_dict(t) for t in d["trees"]])
