"""Classifier suite: C4.5 tree, kNN, naive Bayes, random forest, MLP.

Every kind is trained through :func:`train` from a
:class:`ClassifierSpec`; omitted parameters take the defaults declared
on the per-kind parameter dataclasses below.
"""
from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from ..errors import EmptyTrainingSet, ParseError, SchemaMismatch
from ..features import CLASS_VALUES, Dataset, Instance, schema_fingerprint
from .bayes import NaiveBayesModel, smoothed_prior
from .forest import ForestModel, derive_sub_seeds, grow_random_tree, subspace_size
from .knn import KnnModel
from .mlp import MlpModel, hidden_units
from .tree import Tree, entropy, grow_tree, prune

DEFAULT_SEED = 1
MODEL_FORMAT = "ransomflow-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class DecisionTreeParams:
    confidence: float = 0.25
    min_leaf: int = 2
    prune: bool = True


@dataclass(frozen=True)
class KnnParams:
    k: int = 1


@dataclass(frozen=True)
class NaiveBayesParams:
    bins: int = 10
    alpha: float = 0.5


@dataclass(frozen=True)
class RandomForestParams:
    n_trees: int = 100
    max_features: int | None = None
    bootstrap: bool = True
    sub_seeds: tuple[int, ...] | None = None


@dataclass(frozen=True)
class MlpParams:
    hidden: int | None = None
    learning_rate: float = 0.3
    momentum: float = 0.2
    epochs: int = 500


PARAMS = {
    "DecisionTree": DecisionTreeParams,
    "KNN": KnnParams,
    "NaiveBayes": NaiveBayesParams,
    "RandomForest": RandomForestParams,
    "MLP": MlpParams,
}
KINDS = tuple(PARAMS)

_ALIASES = {
    "decisiontree": "DecisionTree", "tree": "DecisionTree", "j48": "DecisionTree", "c45": "DecisionTree",
    "knn": "KNN", "ibk": "KNN",
    "naivebayes": "NaiveBayes", "bayes": "NaiveBayes", "nb": "NaiveBayes", "bayesnet": "NaiveBayes",
    "randomforest": "RandomForest", "forest": "RandomForest", "rf": "RandomForest",
    "mlp": "MLP", "multilayerperceptron": "MLP",
}


def canonical_kind(name: str) -> str:
    key = name.replace("-", "").replace("_", "").replace(" ", "").lower()
    try:
        return _ALIASES[key]
    except KeyError:
        raise ValueError(f"unknown classifier {name!r}; choose from {', '.join(KINDS)}") from None


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: Any = None
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        kind = canonical_kind(self.kind)
        object.__setattr__(self, "kind", kind)
        params = self.params
        if params is None:
            params = PARAMS[kind]()
        elif isinstance(params, dict):
            params = PARAMS[kind](**params)
        elif not isinstance(params, PARAMS[kind]):
            raise TypeError(f"{kind} expects {PARAMS[kind].__name__}, got {type(params).__name__}")
        object.__setattr__(self, "params", params)

    @property
    def name(self) -> str:
        return self.kind


class Prediction(NamedTuple):
    label: str
    score: float


@dataclass(eq=False)
class Model:
    kind: str
    params: Any
    seed: int
    features: tuple[str, ...]
    fingerprint: str
    structure: Any
    build_time: float = field(default=0.0, compare=False)

    def distribution(self, X: np.ndarray) -> np.ndarray:
        return self.structure.distribution(np.asarray(X, dtype=np.float64))


def _check_nonempty(dataset: Dataset) -> None:
    if len(dataset) == 0:
        raise EmptyTrainingSet("training set has no instances")


def _fit_structure(kind: str, params, X, y, seed: int):
    if kind == "DecisionTree":
        tree = grow_tree(X, y, min_leaf=params.min_leaf, criterion="gain_ratio",
                         zero_gain_splits=not params.prune)
        return prune(tree, params.confidence) if params.prune else tree
    if kind == "KNN":
        return KnnModel.fit(X, y, params.k)
    if kind == "NaiveBayes":
        return NaiveBayesModel.fit(X, y, params.bins, params.alpha)
    if kind == "RandomForest":
        k = params.max_features or subspace_size(X.shape[1])
        seeds = params.sub_seeds or derive_sub_seeds(seed, params.n_trees)
        if len(seeds) != params.n_trees:
            raise ValueError("sub_seeds must provide one seed per tree")
        return ForestModel([grow_random_tree(X, y, s, k, params.bootstrap) for s in seeds])
    if kind == "MLP":
        return MlpModel.fit(X, y, hidden=params.hidden, learning_rate=params.learning_rate,
                            momentum=params.momentum, epochs=params.epochs, seed=seed)
    raise ValueError(kind)


def train(dataset: Dataset, spec: ClassifierSpec) -> Model:
    """Fit ``spec`` on ``dataset``; ``build_time`` covers fitting only."""
    _check_nonempty(dataset)
    X, y = dataset.X, dataset.y
    start = time.perf_counter()
    structure = _fit_structure(spec.kind, spec.params, X, y, spec.seed)
    elapsed = time.perf_counter() - start
    return Model(spec.kind, spec.params, spec.seed, dataset.features, dataset.fingerprint,
                 structure, elapsed)


def train_decision_tree(train_set: Dataset, params: DecisionTreeParams | None = None, seed: int = DEFAULT_SEED) -> Model:
    return train(train_set, ClassifierSpec("DecisionTree", params, seed))


def train_knn(train_set: Dataset, params: KnnParams | None = None, seed: int = DEFAULT_SEED) -> Model:
    return train(train_set, ClassifierSpec("KNN", params, seed))


def train_naive_bayes(train_set: Dataset, params: NaiveBayesParams | None = None, seed: int = DEFAULT_SEED) -> Model:
    return train(train_set, ClassifierSpec("NaiveBayes", params, seed))


def train_random_forest(train_set: Dataset, params: RandomForestParams | None = None, seed: int = DEFAULT_SEED) -> Model:
    return train(train_set, ClassifierSpec("RandomForest", params, seed))


def train_mlp(train_set: Dataset, params: MlpParams | None = None, seed: int = DEFAULT_SEED) -> Model:
    return train(train_set, ClassifierSpec("MLP", params, seed))


def _check_schema(model: Model, features) -> None:
    if schema_fingerprint(tuple(features)) != model.fingerprint:
        raise SchemaMismatch(f"model trained on {list(model.features)}, got {list(features)}")


def _decide(dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    labels = dist.argmax(axis=1)
    return labels, dist[np.arange(len(labels)), labels]


def predict(model: Model, instance: Instance) -> Prediction:
    _check_schema(model, instance.features)
    x = np.asarray(instance.attributes, dtype=np.float64)
    if x.shape != (len(model.features),) or not np.isfinite(x).all():
        raise SchemaMismatch("instance has missing or misshapen attribute values")
    labels, scores = _decide(model.distribution(x[None, :]))
    return Prediction(CLASS_VALUES[labels[0]], float(np.clip(scores[0], 0.0, 1.0)))


predict_knn = predict


def predict_dataset(model: Model, dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Class indices and scores for every instance of ``dataset``."""
    _check_schema(model, dataset.features)
    if len(dataset) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    labels, scores = _decide(model.distribution(dataset.X))
    return labels, np.clip(scores, 0.0, 1.0)


_STRUCTURES = {"DecisionTree": Tree, "KNN": KnnModel, "NaiveBayes": NaiveBayesModel,
               "RandomForest": ForestModel, "MLP": MlpModel}


def dumps_model(model: Model) -> str:
    params = dataclasses.asdict(model.params)
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "seed": model.seed,
        "params": params,
        "features": list(model.features),
        "fingerprint": model.fingerprint,
        "structure": model.structure.to_dict(),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def loads_model(text: str, path=None) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file is not valid JSON: {exc.msg}", exc.lineno, path) from None
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
        raise ParseError("not a ransomflow model container (format/version mismatch)", None, path)
    kind = doc["kind"]
    params = dict(doc["params"])
    if params.get("sub_seeds") is not None:
        params["sub_seeds"] = tuple(params["sub_seeds"])
    return Model(kind, PARAMS[kind](**params), doc["seed"], tuple(doc["features"]),
                 doc["fingerprint"], _STRUCTURES[kind].from_dict(doc["structure"]))


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> Model:
    with open(path, encoding="ascii") as fh:
        return loads_model(fh.read(), os.fspath(path))


__all__ = [
    "KINDS", "ClassifierSpec", "Model", "Prediction", "DecisionTreeParams", "KnnParams",
    "NaiveBayesParams", "RandomForestParams", "MlpParams", "entropy", "smoothed_prior",
    "subspace_size", "hidden_units", "train", "train_decision_tree", "train_knn",
    "train_naive_bayes", "train_random_forest", "train_mlp", "predict", "predict_knn",
    "predict_dataset", "dumps_model", "loads_model", "save_model", "load_model",
]
