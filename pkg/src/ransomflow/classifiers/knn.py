"""k-nearest neighbours over min-max normalized attributes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CHUNK_CELLS = 4_000_000


def minmax_bounds(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return X.min(axis=0), X.max(axis=0)


def normalize(X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Scale to the training range. Constant attributes map to 0."""
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (X - lo) / safe, 0.0)


@dataclass
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    k: int = 1

    @classmethod
    def fit(cls, X, y, k: int = 1) -> KnnModel:
        X = np.asarray(X, dtype=np.float64)
        lo, hi = minmax_bounds(X)
        return cls(X.copy(), np.asarray(y, dtype=np.int64).copy(), lo, hi, k)

    def distances(self, x) -> np.ndarray:
        """Euclidean distance from one query to every stored instance."""
        q = normalize(np.asarray(x, dtype=np.float64)[None, :], self.lo, self.hi)
        train = normalize(self.X, self.lo, self.hi)
        return np.sqrt(((train - q) ** 2).sum(axis=1))

    def distribution(self, X: np.ndarray, n_classes: int = 2) -> np.ndarray:
        train = normalize(self.X, self.lo, self.hi)
        queries = normalize(np.asarray(X, dtype=np.float64), self.lo, self.hi)
        k = min(self.k, len(train))
        out = np.zeros((len(queries), n_classes))
        step = max(1, _CHUNK_CELLS // max(1, train.size))
        for start in range(0, len(queries), step):
            q = queries[start:start + step]
            d2 = ((q[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
            if k == 1:
                nearest = d2.argmin(axis=1)[:, None]
            else:
                # stable sort keeps training order among equal distances
                nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
            votes = self.y[nearest]
            for c in range(n_classes):
                out[start:start + len(q), c] = (votes == c).sum(axis=1)
        return out / k

    def to_dict(self) -> dict:
        return {"X": self.X.tolist(), "y": self.y.tolist(), "lo": self.lo.tolist(),
                "hi": self.hi.tolist(), "k": self.k}

    @classmethod
    def from_dict(cls, d: dict) -> KnnModel:
        n_features = len(d["lo"])
        return cls(np.asarray(d["X"], dtype=np.float64).reshape(-1, n_features),
                   np.asarray(d["y"], dtype=np.int64), np.asarray(d["lo"], dtype=np.float64),
                   np.asarray(d["hi"], dtype=np.float64), int(d["k"]))
