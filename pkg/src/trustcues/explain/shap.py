from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from ..forest.tree import Tree
from ._treeshap import tree_shap_batch

PATH_DEPENDENT = "tree_path_dependent"
INTERVENTIONAL = "interventional"


@dataclass
class ShapAttribution:
    """Per-class Shapley values for one sample.

    ``phi[c, j]`` is feature ``j``'s contribution to the vote fraction of
    class ``c``; ``base[c] + phi[c].sum() == output[c]``.
    """

    phi: np.ndarray
    base: np.ndarray
    output: np.ndarray
    classes: list
    sample_id: str | None = None

    def local_accuracy_gap(self) -> float:
        return float(np.max(np.abs(self.base + self.phi.sum(axis=1) - self.output)))


def _trees_of(model) -> list[Tree]:
    if isinstance(model, Tree):
        return [model]
    return list(model.estimators_)


def _n_features(model, X) -> int:
    return getattr(model, "n_features_in_", X.shape[1])


def _classes(model, trees) -> list:
    if hasattr(model, "classes_"):
        return list(model.classes_)
    return list(range(trees[0].n_classes))


def node_cover(tree: Tree, background: np.ndarray) -> np.ndarray:
    """Number of background rows whose path visits each node."""
    cover = np.zeros(tree.n_nodes)
    node = np.zeros(background.shape[0], dtype=np.int64)
    rows = np.arange(background.shape[0])
    cover[0] = background.shape[0]
    while True:
        feat = tree.feature[node]
        active = feat >= 0
        if not active.any():
            return cover
        go_left = background[rows, np.where(active, feat, 0)] <= tree.threshold[node]
        node = np.where(active, np.where(go_left, tree.left[node], tree.right[node]), -1)
        keep = node >= 0
        rows, node = rows[keep], node[keep]
        np.add.at(cover, node, 1.0)


def cover_fractions(tree: Tree, cover: np.ndarray) -> np.ndarray:
    """``frac[child] = cover[child] / cover[parent]`` (0 for an uncovered parent)."""
    frac = np.zeros(tree.n_nodes)
    frac[0] = 1.0
    for i in np.flatnonzero(tree.feature >= 0):
        if cover[i] > 0:
            frac[tree.left[i]] = cover[tree.left[i]] / cover[i]
            frac[tree.right[i]] = cover[tree.right[i]] / cover[i]
    return frac


def expected_output(tree: Tree, frac: np.ndarray) -> np.ndarray:
    """Cover-weighted mean leaf output, i.e. the output averaged over the background."""
    weight = np.zeros(tree.n_nodes)
    weight[0] = 1.0
    for i in range(tree.n_nodes):
        if tree.feature[i] >= 0:
            weight[tree.left[i]] = weight[i] * frac[tree.left[i]]
            weight[tree.right[i]] = weight[i] * frac[tree.right[i]]
    leaves = tree.is_leaf
    return weight[leaves] @ tree.leaf_output[leaves]


class _Prepared:
    __slots__ = ("tree", "frac", "output", "depth", "base")

    def __init__(self, tree: Tree, background: np.ndarray):
        self.tree = tree
        self.frac = cover_fractions(tree, node_cover(tree, background))
        self.output = tree.leaf_output
        self.depth = tree.depth()
        self.base = expected_output(tree, self.frac)


def _leaf_paths(tree: Tree):
    """For each leaf: feature -> (lo, hi] interval the path requires."""
    paths = []
    stack = [(0, {})]
    while stack:
        node, box = stack.pop()
        f = tree.feature[node]
        if f < 0:
            paths.append((node, box))
            continue
        t = tree.threshold[node]
        lo, hi = box.get(f, (-np.inf, np.inf))
        lbox = dict(box)
        lbox[f] = (lo, min(hi, t))
        rbox = dict(box)
        rbox[f] = (max(lo, t), hi)
        stack.append((tree.right[node], rbox))
        stack.append((tree.left[node], lbox))
    return paths


def _interventional_tree(tree: Tree, X: np.ndarray, background: np.ndarray,
                         out: np.ndarray) -> None:
    """Exact interventional Shapley values, averaged over background rows."""
    output = tree.leaf_output
    nb = background.shape[0]
    fact = np.array([factorial(k) for k in range(tree.depth() + 1)], dtype=np.float64)
    for leaf, box in _leaf_paths(tree):
        if not box:
            continue
        feats = np.fromiter(box.keys(), dtype=np.int64)
        lo = np.array([box[f][0] for f in feats])
        hi = np.array([box[f][1] for f in feats])
        r_ok = (background[:, feats] > lo) & (background[:, feats] <= hi)
        v = output[leaf]
        for row in range(X.shape[0]):
            x_ok = (X[row, feats] > lo) & (X[row, feats] <= hi)
            reach = (x_ok | r_ok).all(axis=1)
            if not reach.any():
                continue
            in_a = x_ok & ~r_ok[reach]
            in_b = r_ok[reach] & ~x_ok
            a = in_a.sum(axis=1)
            b = in_b.sum(axis=1)
            n = a + b
            wa = np.where(a > 0, fact[np.maximum(a - 1, 0)] * fact[b] / fact[n], 0.0)
            wb = np.where(b > 0, fact[a] * fact[np.maximum(b - 1, 0)] / fact[n], 0.0)
            contrib = (in_a * wa[:, None] - in_b * wb[:, None]).sum(axis=0) / nb
            out[row, feats, :] += contrib[:, None] * v[None, :]


class TreeExplainer:
    """Exact Shapley attributions of forest vote fractions.

    Parameters
    ----------
    model : RandomForest or Tree
    background : array (n, d)
        Reference rows. For the path-dependent algorithm they define node
        covers; for the interventional one absent features are drawn from
        them.
    feature_perturbation : {"tree_path_dependent", "interventional"}
    """

    def __init__(self, model, background, feature_perturbation: str = PATH_DEPENDENT):
        if feature_perturbation not in (PATH_DEPENDENT, INTERVENTIONAL):
            raise ValueError(f"unknown feature_perturbation {feature_perturbation!r}")
        background = np.asarray(background, dtype=np.float64)
        if background.ndim != 2 or background.shape[0] == 0:
            raise ValueError("background must be a non-empty 2-d array")
        self.model = model
        self.trees = _trees_of(model)
        self.n_features = _n_features(model, background)
        if background.shape[1] != self.n_features:
            raise ValueError(f"background has {background.shape[1]} features, "
                             f"model expects {self.n_features}")
        self.background = background
        self.feature_perturbation = feature_perturbation
        self.classes = _classes(model, self.trees)
        self._prepared = [_Prepared(t, background) for t in self.trees]
        self.expected_value = np.mean([p.base for p in self._prepared], axis=0)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise ValueError(f"X has {X.shape[1]} features, model expects "
                             f"{self.n_features}")
        return X

    def shap_values(self, X) -> np.ndarray:
        """Shapley values shaped ``(n_samples, n_classes, n_features)``."""
        X = self._check(X)
        n_classes = len(self.classes)
        acc = np.zeros((X.shape[0], self.n_features, n_classes))
        for p in self._prepared:
            t = p.tree
            if self.feature_perturbation == PATH_DEPENDENT:
                tree_shap_batch(t.left, t.right, t.feature, t.threshold, p.output,
                                p.frac, p.depth, X, acc)
            else:
                _interventional_tree(t, X, self.background, acc)
        acc /= len(self._prepared)
        return np.ascontiguousarray(acc.transpose(0, 2, 1))

    def model_output(self, X) -> np.ndarray:
        X = self._check(X)
        return np.mean([t.predict_votes(X) for t in self.trees], axis=0)

    def explain(self, x, sample_id=None) -> ShapAttribution:
        x = self._check(x)
        return ShapAttribution(self.shap_values(x)[0], self.expected_value.copy(),
                               self.model_output(x)[0], self.classes, sample_id)

    def explain_many(self, X, sample_ids=None) -> list[ShapAttribution]:
        X = self._check(X)
        phi = self.shap_values(X)
        out = self.model_output(X)
        ids = sample_ids if sample_ids is not None else [None] * X.shape[0]
        return [ShapAttribution(phi[i], self.expected_value.copy(), out[i],
                                self.classes, ids[i]) for i in range(X.shape[0])]


def tree_shap(model, x, background, *, feature_perturbation: str = PATH_DEPENDENT,
              sample_id=None) -> ShapAttribution:
    return TreeExplainer(model, background, feature_perturbation).explain(x, sample_id)


# -- brute force oracle ---------------------------------------------------

def _path_value(tree: Tree, frac: np.ndarray, x: np.ndarray, masks: np.ndarray,
                col: dict) -> np.ndarray:
    """Cover-weighted conditional expectation for every coalition at once."""
    out = np.zeros((masks.shape[0], tree.n_classes))
    output = tree.leaf_output
    stack = [(0, np.ones(masks.shape[0]))]
    while stack:
        node, w = stack.pop()
        f = tree.feature[node]
        if f < 0:
            out += w[:, None] * output[node][None, :]
            continue
        known = masks[:, col[f]]
        goes_left = x[f] <= tree.threshold[node]
        l, r = tree.left[node], tree.right[node]
        wl = w * np.where(known, 1.0 if goes_left else 0.0, frac[l])
        wr = w * np.where(known, 0.0 if goes_left else 1.0, frac[r])
        stack.append((r, wr))
        stack.append((l, wl))
    return out


def _interventional_value(tree: Tree, x, background, masks, col) -> np.ndarray:
    """Mean over background rows of the tree on the hybrid input."""
    feats = list(col)
    out = np.zeros((masks.shape[0], tree.n_classes))
    output = tree.leaf_output
    hybrid = np.broadcast_to(background, (masks.shape[0],) + background.shape).copy()
    for f in feats:
        known = masks[:, col[f]]
        hybrid[known, :, f] = x[f]
    flat = hybrid.reshape(-1, background.shape[1])
    votes = output[tree.apply(flat)].reshape(masks.shape[0], background.shape[0], -1)
    out += votes.mean(axis=1)
    return out


def brute_force_shapley(model, x, background, *, value: str = PATH_DEPENDENT,
                        max_features: int = 20) -> ShapAttribution:
    """Shapley values by enumerating every coalition of the model's split features.

    ``value`` chooses the coalition game: the cover-weighted conditional
    expectation (``"tree_path_dependent"``) or the mean over background rows
    of the model on ``(x_S, b_rest)`` (``"interventional"``).
    """
    trees = _trees_of(model)
    background = np.asarray(background, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).ravel()
    n_features = _n_features(model, background)
    if x.shape[0] != n_features or background.shape[1] != n_features:
        raise ValueError("dimension mismatch between model, x and background")
    if background.shape[0] == 0:
        raise ValueError("background must be non-empty")
    active = sorted(set().union(*[set(t.used_features().tolist()) for t in trees]))
    if len(active) > max_features:
        raise ValueError(f"{len(active)} split features exceed the enumeration "
                         f"limit of {max_features}")
    k = len(active)
    col = {f: i for i, f in enumerate(active)}
    masks = ((np.arange(2**k)[:, None] >> np.arange(k)[None, :]) & 1).astype(bool)

    n_classes = trees[0].n_classes
    v = np.zeros((2**k, n_classes))
    for t in trees:
        if value == PATH_DEPENDENT:
            frac = cover_fractions(t, node_cover(t, background))
            v += _path_value(t, frac, x, masks, col)
        elif value == INTERVENTIONAL:
            v += _interventional_value(t, x, background, masks, col)
        else:
            raise ValueError(f"unknown value function {value!r}")
    v /= len(trees)

    sizes = masks.sum(axis=1)
    phi = np.zeros((n_classes, n_features))
    fact = [factorial(i) for i in range(k + 1)]
    ids = np.arange(2**k)
    for i, f in enumerate(active):
        without = ids[~masks[:, i]]
        with_i = without | (1 << i)
        s = sizes[without]
        w = np.array([fact[m] * fact[k - m - 1] / fact[k] for m in s])
        phi[:, f] = (w[:, None] * (v[with_i] - v[without])).sum(axis=0)
    return ShapAttribution(phi, v[0].copy(), v[-1].copy(), _classes(model, trees))
