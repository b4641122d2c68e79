"""Repeated stratified 80/20 evaluation of the forest."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .estimator import RandomForest

CI_Z = 1.96


def stratified_split(y, test_size: float, seed: int):
    """Shuffle and split indices so every class keeps its share in both parts.

    Each class with ``n_c >= 2`` contributes ``max(1, round(test_size * n_c))``
    samples to the test part and at least one to the training part.
    """
    y = np.asarray(y, dtype=object)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for label in sorted(set(y.tolist()), key=str):
        idx = np.flatnonzero(y == label)
        idx = idx[rng.permutation(len(idx))]
        if len(idx) < 2:
            raise ValueError(f"class {label!r} has fewer than 2 samples; "
                             "cannot stratify")
        n_test = min(len(idx) - 1, max(1, int(round(test_size * len(idx)))))
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    train = np.sort(np.concatenate(train))
    test = np.sort(np.concatenate(test))
    return train, test


def mean_ci(values, z: float = CI_Z) -> tuple[float, float, float]:
    """Mean and normal-approximation interval ``mean +- z * sd / sqrt(n)``."""
    v = np.asarray(values, dtype=np.float64)
    mean = float(v.mean())
    if len(v) < 2:
        return mean, mean, mean
    half = z * float(v.std(ddof=1)) / math.sqrt(len(v))
    return mean, mean - half, mean + half


@dataclass
class EvalReport:
    target: str
    labels: list
    accuracies: list
    mean: float
    ci_low: float
    ci_high: float
    confusion: list
    n_samples: int
    n_trees: int
    test_size: float = 0.2
    seeds: list = field(default_factory=list)
    majority_rate: float = 0.0
    ci_method: str = "mean +- 1.96*sd/sqrt(n_seeds), sd with ddof=1"

    def headline(self) -> str:
        return (f"mean accuracy of {100 * self.mean:.2f}% "
                f"[95% CI: {100 * self.ci_low:.2f}%, {100 * self.ci_high:.2f}%]")

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "labels": list(self.labels),
            "n_samples": self.n_samples,
            "n_trees": self.n_trees,
            "test_size": self.test_size,
            "seeds": list(self.seeds),
            "accuracies": [float(a) for a in self.accuracies],
            "mean": self.mean,
            "ci95": [self.ci_low, self.ci_high],
            "ci_method": self.ci_method,
            "majority_rate": self.majority_rate,
            "confusion": self.confusion,
            "summary": self.headline(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        lines = [
            f"target: {self.target}  samples: {self.n_samples}  trees: {self.n_trees}"
            f"  seeds: {len(self.accuracies)}",
            self.headline(),
            f"majority-class rate: {100 * self.majority_rate:.2f}%",
            "",
            "per-seed accuracy:",
        ]
        for s, a in zip(self.seeds, self.accuracies):
            lines.append(f"  seed {s:>4}: {100 * a:6.2f}%")
        width = max(8, max(len(str(l)) for l in self.labels) + 2)
        lines += ["", "confusion (rows true, columns predicted, pooled over seeds):",
                  " " * width + "".join(f"{str(l):>{width}}" for l in self.labels)]
        for label, row in zip(self.labels, self.confusion):
            lines.append(f"{str(label):<{width}}" + "".join(f"{c:>{width}d}" for c in row))
        return "\n".join(lines) + "\n"


def evaluate_protocol(X, y, *, target: str = "level", labels=None, seeds: int = 20,
                      base_seed: int = 0, n_estimators: int = 100,
                      test_size: float = 0.2, **forest_params) -> EvalReport:
    """Fit and score the forest on ``seeds`` independent stratified splits.

    Split ``i`` uses seed ``base_seed + i`` for both the partition and the
    forest.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=object)
    if len(y) == 0:
        raise ValueError("empty corpus")
    if labels is None:
        from ..featurize import LABEL_ORDER
        labels = list(LABEL_ORDER.get(target, sorted(set(y.tolist()), key=str)))
    labels = list(labels)
    lookup = {l: i for i, l in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=np.int64)
    accuracies = []
    seed_list = [base_seed + i for i in range(seeds)]
    for seed in seed_list:
        train, test = stratified_split(y, test_size, seed)
        assert set(y[test].tolist()) == set(y.tolist()), "class missing from test split"
        model = RandomForest(n_estimators=n_estimators, random_state=seed,
                             labels=labels, **forest_params).fit(X[train], y[train])
        pred = model.predict(X[test])
        accuracies.append(float(np.mean(pred == y[test])))
        for t, p in zip(y[test], pred):
            confusion[lookup[t], lookup[p]] += 1
    mean, lo, hi = mean_ci(accuracies)
    _, counts = np.unique(y.astype(str), return_counts=True)
    return EvalReport(
        target=target, labels=labels, accuracies=accuracies, mean=mean,
        ci_low=lo, ci_high=hi, confusion=confusion.tolist(), n_samples=len(y),
        n_trees=n_estimators, test_size=test_size, seeds=seed_list,
        majority_rate=float(counts.max() / counts.sum()),
    )
