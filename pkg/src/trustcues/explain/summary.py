from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

ZERO_TOL = 1e-12


@dataclass(frozen=True)
class FeatureImportance:
    index: int
    name: str
    mean_abs: float
    direction: float


@dataclass
class ShapSummary:
    """Per-class feature ranking by mean absolute Shapley value.

    ``direction`` is the Pearson correlation between a feature's Shapley
    value and its presence (count > 0); positive means presence pushes the
    prediction toward the class. Features whose values are all zero are
    left out of the ranking.
    """

    classes: list
    rankings: dict
    n_samples: int

    def top(self, label, k: int | None = None) -> list[FeatureImportance]:
        ranked = self.rankings[label]
        return ranked if k is None else ranked[:k]

    def to_rows(self, k: int | None = None) -> list[dict]:
        rows = []
        for label in self.classes:
            for rank, fi in enumerate(self.top(label, k), start=1):
                rows.append({"class": str(label), "rank": rank, "feature": fi.name,
                             "index": fi.index, "mean_abs_shap": fi.mean_abs,
                             "direction": fi.direction})
        return rows

    def to_csv(self, k: int | None = None) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["class", "rank", "feature", "index",
                                                 "mean_abs_shap", "direction"],
                                lineterminator="\n")
        writer.writeheader()
        for row in self.to_rows(k):
            row = dict(row, mean_abs_shap=f"{row['mean_abs_shap']:.10g}",
                       direction=f"{row['direction']:.6f}")
            writer.writerow(row)
        return buf.getvalue()

    def to_table(self, k: int = 10) -> str:
        lines = []
        for label in self.classes:
            lines.append(f"class {label}:")
            ranked = self.top(label, k)
            if not ranked:
                lines.append("  (no feature carries attribution)")
            for rank, fi in enumerate(ranked, start=1):
                sign = "+" if fi.direction > 0 else "-" if fi.direction < 0 else " "
                lines.append(f"  {rank:>3}. {fi.name:<28} {fi.mean_abs:.6f}  "
                             f"presence {sign}{abs(fi.direction):.3f}")
        return "\n".join(lines) + "\n"


def _direction(phi: np.ndarray, present: np.ndarray) -> float:
    if phi.std() <= ZERO_TOL or present.std() == 0:
        return 0.0
    return float(np.corrcoef(phi, present)[0, 1])


def summarize(shap_values, X, classes, feature_names=None) -> ShapSummary:
    """Rank features per class.

    Parameters
    ----------
    shap_values : array (n_samples, n_classes, n_features) or list of ShapAttribution
    X : array (n_samples, n_features)
        Feature values the attributions were computed for.
    """
    if isinstance(shap_values, list):
        shap_values = np.stack([a.phi for a in shap_values])
    phi = np.asarray(shap_values, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if phi.ndim != 3 or phi.shape[0] == 0:
        raise ValueError("need at least one attribution")
    n, n_classes, d = phi.shape
    if X.shape != (n, d):
        raise ValueError("X does not match the attributions")
    names = list(feature_names) if feature_names is not None else [str(j) for j in range(d)]
    present = (X > 0).astype(np.float64)
    rankings = {}
    for c, label in enumerate(classes):
        mean_abs = np.abs(phi[:, c, :]).mean(axis=0)
        order = sorted(range(d), key=lambda j: (-mean_abs[j], j))
        rankings[label] = [
            FeatureImportance(j, names[j], float(mean_abs[j]),
                              _direction(phi[:, c, j], present[:, j]))
            for j in order if mean_abs[j] > ZERO_TOL
        ]
    return ShapSummary(list(classes), rankings, n)


def plot_data(shap_values, X, classes, feature_names, k: int = 15) -> str:
    """JSON for a beeswarm-style plot: per class, top features with per-sample
    Shapley value and presence flag."""
    phi = np.asarray(shap_values, dtype=np.float64)
    X = np.asarray(X)
    summary = summarize(phi, X, classes, feature_names)
    doc = {"classes": [str(c) for c in classes], "panels": []}
    for c, label in enumerate(classes):
        panel = {"class": str(label), "features": []}
        for fi in summary.top(label, k):
            panel["features"].append({
                "feature": fi.name,
                "mean_abs_shap": fi.mean_abs,
                "shap": [round(float(v), 12) for v in phi[:, c, fi.index]],
                "present": [int(v > 0) for v in X[:, fi.index]],
            })
        doc["panels"].append(panel)
    return json.dumps(doc, indent=1) + "\n"
