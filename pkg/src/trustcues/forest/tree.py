from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class Tree:
    """Array-backed binary classification tree.

    ``value[i]`` holds the (weighted) training class counts reaching node
    ``i``. A sample goes left iff ``x[feature] <= threshold``. Each leaf
    votes for its majority class, ties going to the lowest class index.
    """

    left: np.ndarray
    right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=np.int32)
        self.right = np.asarray(self.right, dtype=np.int32)
        self.feature = np.asarray(self.feature, dtype=np.int32)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.value.ndim != 2:
            raise ValueError("value must be (n_nodes, n_classes)")
        n = len(self.feature)
        for arr in (self.left, self.right, self.threshold, self.value):
            if len(arr) != n:
                raise ValueError("tree arrays have inconsistent lengths")
        leaves = self.feature < 0
        if np.any(self.left[~leaves] < 0) or np.any(self.right[~leaves] < 0):
            raise ValueError("internal node without two children")
        if np.any(self.value[leaves].sum(axis=1) <= 0):
            raise ValueError("leaf with empty class counts")

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_classes(self) -> int:
        return self.value.shape[1]

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @property
    def leaf_output(self) -> np.ndarray:
        """One-hot majority vote for every node (meaningful at leaves)."""
        out = np.zeros_like(self.value)
        out[np.arange(self.n_nodes), np.argmax(self.value, axis=1)] = 1.0
        return out

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
        return int(depths.max()) if self.n_nodes else 0

    def used_features(self) -> np.ndarray:
        return np.unique(self.feature[self.feature >= 0])

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = np.asarray(X)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                return node
            go_left = X[rows, np.where(active, feat, 0)] <= self.threshold[node]
            nxt = np.where(go_left, self.left[node], self.right[node])
            node = np.where(active, nxt, node)

    def predict_votes(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_output[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        value = np.asarray(d["value"], dtype=np.float64)
        return cls(d["left"], d["right"], d["feature"], d["threshold"], value)

    def equals(self, other: "Tree") -> bool:
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("left", "right", "feature", "threshold", "value"))


def gini(counts) -> float:
    """Gini impurity ``1 - sum(p_i^2)`` of a vector of class counts."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.dot(p, p))
