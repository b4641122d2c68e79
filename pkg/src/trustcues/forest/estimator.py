from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from ._grow import grow_tree
from .tree import Tree

MODEL_FORMAT = "trustcues-forest"
MODEL_VERSION = 1
_MAX_SEED = 2**31 - 1


def resolve_max_features(max_features, n_features: int) -> int:
    if max_features is None:
        return n_features
    if max_features == "sqrt":
        m = int(round(math.sqrt(n_features)))
    elif max_features == "log2":
        m = int(round(math.log2(n_features)))
    elif isinstance(max_features, (int, np.integer)):
        m = int(max_features)
    elif isinstance(max_features, float):
        m = int(round(max_features * n_features))
    else:
        raise ValueError(f"invalid max_features {max_features!r}")
    return max(1, min(m, n_features))


def _bin_columns(X: np.ndarray):
    """Rank-encode every column; returns codes, bin counts and bin edges."""
    n, d = X.shape
    codes = np.empty((n, d), dtype=np.int32)
    uniques = []
    for j in range(d):
        u = np.unique(X[:, j])
        codes[:, j] = np.searchsorted(u, X[:, j])
        uniques.append(u)
    n_bins = np.array([len(u) for u in uniques], dtype=np.int64)
    return codes, n_bins, uniques


class RandomForest(ClassifierMixin, BaseEstimator):
    """Bagged Gini trees voting by majority.

    Parameters
    ----------
    n_estimators : int, default=100
    max_features : {"sqrt", "log2"}, int, float or None, default="sqrt"
        Features drawn per node among those that vary in the node.
        ``"sqrt"`` rounds to the nearest integer (10 for 94 features).
    max_depth : int or None, default=None
    min_samples_leaf : int, default=1
    bootstrap : bool, default=True
    random_state : int, RandomState or None, default=0
    labels : sequence or None
        Fixed class order used for output columns and tie-breaks. Sorted
        unique labels when None.
    """

    def __init__(self, n_estimators=100, max_features="sqrt", max_depth=None,
                 min_samples_leaf=1, bootstrap=True, random_state=0, labels=None):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state
        self.labels = labels

    def fit(self, X, y, feature_names=None):
        """Grow the trees.

        ``feature_names`` is stored as ``feature_names_`` so later consumers
        can verify they use the same vocabulary.
        """
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        y = np.asarray(y, dtype=object)
        if y.ndim != 1 or len(y) != X.shape[0]:
            raise ValueError("y must be a 1-d array with one label per row")
        present = sorted(set(y.tolist()), key=str)
        if len(present) < 2:
            raise ValueError(
                f"need at least two classes to fit, got {present}")
        if self.labels is None:
            classes = present
        else:
            classes = list(self.labels)
            missing = set(present) - set(classes)
            if missing:
                raise ValueError(f"labels {sorted(missing, key=str)} not in "
                                 f"the configured label set")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be positive")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be at least 1")

        self.classes_ = np.asarray(classes, dtype=object)
        lookup = {c: i for i, c in enumerate(classes)}
        y_idx = np.array([lookup[v] for v in y], dtype=np.int64)
        n, d = X.shape
        self.n_features_in_ = d
        if feature_names is not None and len(feature_names) != d:
            raise ValueError(f"{len(feature_names)} feature names for {d} columns")
        self.feature_names_ = None if feature_names is None else [str(f) for f in feature_names]
        self.max_features_ = resolve_max_features(self.max_features, d)
        max_depth = -1 if self.max_depth is None else int(self.max_depth)

        codes, n_bins, uniques = _bin_columns(X)
        rng = check_random_state(self.random_state)
        seeds = rng.randint(0, _MAX_SEED, size=self.n_estimators)
        self.estimators_ = []
        self.tree_seeds_ = seeds.tolist()
        for seed in seeds:
            if self.bootstrap:
                boot = np.random.default_rng(int(seed)).integers(0, n, n)
                weight = np.bincount(boot, minlength=n).astype(np.float64)
            else:
                weight = np.ones(n)
            keep = np.flatnonzero(weight > 0)
            left, right, feat, sbin, value, _ = grow_tree(
                codes[keep], y_idx[keep], weight[keep], n_bins,
                len(classes), self.max_features_, max_depth,
                int(self.min_samples_leaf), int(seed))
            threshold = np.full(len(feat), -2.0)
            internal = np.flatnonzero(feat >= 0)
            for node in internal:
                u = uniques[feat[node]]
                b = sbin[node]
                threshold[node] = (u[b] + u[b + 1]) / 2.0
            self.estimators_.append(Tree(left, right, feat, threshold, value))
        return self

    def _check_X(self, X):
        check_is_fitted(self, "estimators_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, the forest was "
                             f"trained on {self.n_features_in_}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Fraction of trees voting for each class (columns follow ``classes_``)."""
        X = self._check_X(X)
        votes = np.zeros((X.shape[0], len(self.classes_)))
        for tree in self.estimators_:
            votes += tree.predict_votes(X)
        return votes / len(self.estimators_)

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    def vote(self, x):
        """Label and vote fractions for a single feature vector."""
        proba = self.predict_proba(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
        return self.classes_[int(np.argmax(proba))], dict(zip(self.classes_, proba))

    # -- persistence ------------------------------------------------------

    def to_dict(self) -> dict:
        check_is_fitted(self, "estimators_")
        params = self.get_params()
        params["random_state"] = (params["random_state"]
                                  if isinstance(params["random_state"], (int, type(None)))
                                  else None)
        params["labels"] = None if params["labels"] is None else list(params["labels"])
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "params": params,
            "classes": list(self.classes_),
            "n_features": self.n_features_in_,
            "feature_names": getattr(self, "feature_names_", None),
            "max_features": self.max_features_,
            "tree_seeds": self.tree_seeds_,
            "trees": [t.to_dict() for t in self.estimators_],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RandomForest":
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError("not a forest model document")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')}")
        model = cls(**doc["params"])
        model.classes_ = np.asarray(doc["classes"], dtype=object)
        model.n_features_in_ = int(doc["n_features"])
        model.feature_names_ = doc.get("feature_names")
        model.max_features_ = int(doc["max_features"])
        model.tree_seeds_ = list(doc.get("tree_seeds", []))
        model.estimators_ = [Tree.from_dict(t) for t in doc["trees"]]
        return model

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RandomForest":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def from_trees(cls, trees, classes, n_features: int) -> "RandomForest":
        """Wrap hand-built trees, e.g. for explainer tests."""
        model = cls(n_estimators=len(trees), labels=list(classes))
        model.classes_ = np.asarray(list(classes), dtype=object)
        model.n_features_in_ = int(n_features)
        model.feature_names_ = None
        model.max_features_ = int(n_features)
        model.tree_seeds_ = []
        model.estimators_ = list(trees)
        return model


def fit_forest(X, y, *, target: str | None = None, n_estimators=100,
               random_state=0, feature_names=None, **params) -> RandomForest:
    """Fit a forest, fixing the label order from ``target`` when given."""
    from ..featurize import LABEL_ORDER

    labels = params.pop("labels", None)
    if labels is None and target is not None:
        labels = list(LABEL_ORDER[target])
    return RandomForest(n_estimators=n_estimators, random_state=random_state,
                        labels=labels, **params).fit(X, y, feature_names=feature_names)
