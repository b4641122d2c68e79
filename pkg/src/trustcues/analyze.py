"""Corpus-level analyses: classifier cross-application and tag co-occurrence."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .featurize import LABEL_ORDER, Corpus
from .lexicon import BehaviorLexicon, default_lexicon


class VocabularyMismatch(ValueError):
    pass


def _pct(counts: dict, total: int) -> dict:
    return {k: (100.0 * v / total if total else 0.0) for k, v in counts.items()}


@dataclass
class CrossApplyReport:
    """Predicted-label distribution of a classifier over a foreign corpus.

    ``strata`` maps each value of ``stratum`` (e.g. the corpus's levels) to
    predicted-label counts within it.
    """

    classifier_id: str
    corpus_id: str
    classes: list
    counts: dict
    n_samples: int
    stratum: str | None = None
    strata: dict = field(default_factory=dict)

    @property
    def percentages(self) -> dict:
        return _pct(self.counts, self.n_samples)

    def stratum_percentages(self) -> dict:
        return {s: _pct(c, sum(c.values())) for s, c in self.strata.items()}

    def share_by_label(self) -> dict:
        """For each predicted label, the percentage drawn from each stratum."""
        out = {}
        for label in self.classes:
            total = sum(c[label] for c in self.strata.values())
            out[label] = {s: (100.0 * c[label] / total if total else 0.0)
                          for s, c in self.strata.items()}
        return out

    def to_dict(self) -> dict:
        return {
            "classifier": self.classifier_id,
            "corpus": self.corpus_id,
            "n_samples": self.n_samples,
            "classes": [str(c) for c in self.classes],
            "counts": {str(k): v for k, v in self.counts.items()},
            "percentages": {str(k): round(v, 6) for k, v in self.percentages.items()},
            "stratum": self.stratum,
            "strata": {str(s): {str(k): v for k, v in c.items()}
                       for s, c in self.strata.items()},
            "stratum_percentages": {
                str(s): {str(k): round(v, 6) for k, v in c.items()}
                for s, c in self.stratum_percentages().items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"{self.classifier_id} applied to {self.corpus_id} "
                 f"({self.n_samples} turns):"]
        for label in self.classes:
            lines.append(f"  {self.percentages[label]:6.2f}% classified as {label} "
                         f"({self.counts[label]})")
        if self.strata:
            lines.append(f"by {self.stratum}:")
            width = max(len(str(s)) for s in self.strata)
            header = " ".join(f"{str(c):>9}" for c in self.classes)
            lines.append(f"  {'':<{width}} {header}")
            for s, pct in self.stratum_percentages().items():
                row = " ".join(f"{pct[c]:8.2f}%" for c in self.classes)
                lines.append(f"  {str(s):<{width}} {row}")
        return "\n".join(lines) + "\n"

    def plot_data(self) -> str:
        """CSV rows for grouped distribution bars."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", "label", "count", "percent"])
        for label in self.classes:
            w.writerow(["all", label, self.counts[label], f"{self.percentages[label]:.4f}"])
        for s, c in self.strata.items():
            pct = _pct(c, sum(c.values()))
            for label in self.classes:
                w.writerow([s, label, c[label], f"{pct[label]:.4f}"])
        return buf.getvalue()


def check_vocabulary(model, lex: BehaviorLexicon) -> None:
    n = getattr(model, "n_features_in_", None)
    if n != lex.n_features:
        raise VocabularyMismatch(
            f"classifier expects {n} features, the lexicon has {lex.n_features}")
    names = getattr(model, "feature_names_", None)
    if names is not None and list(names) != lex.feature_names:
        diff = next(i for i, (a, b) in enumerate(zip(names, lex.feature_names)) if a != b)
        raise VocabularyMismatch(
            f"feature {diff} is {names[diff]!r} in the classifier but "
            f"{lex.feature_names[diff]!r} in the lexicon")


def _default_stratum(corpus: Corpus) -> str | None:
    for target in ("level", "gender"):
        if corpus.samples and all(s.label(target) is not None for s in corpus.samples):
            return target
    return None


def cross_apply(model, corpus: Corpus, *, lex: BehaviorLexicon | None = None,
                stratify_by: str | None = "auto", classifier_id: str = "classifier",
                corpus_id: str | None = None) -> CrossApplyReport:
    """Classify every turn of ``corpus`` and aggregate the predictions.

    Parameters
    ----------
    stratify_by : {"auto", "level", "gender", None}
        Corpus label used for the per-stratum breakdown. ``"auto"`` picks
        the level when present, else the gender.
    """
    lex = lex or default_lexicon()
    check_vocabulary(model, lex)
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    pred = model.predict(corpus.feature_matrix(lex))
    classes = list(model.classes_)
    counts = {c: 0 for c in classes}
    for p in pred:
        counts[p] += 1
    if stratify_by == "auto":
        stratify_by = _default_stratum(corpus)
    strata = {}
    if stratify_by is not None:
        values = corpus.labels(stratify_by)
        order = [v for v in LABEL_ORDER[stratify_by] if v in set(values)]
        strata = {v: {c: 0 for c in classes} for v in order}
        for v, p in zip(values, pred):
            strata[v][p] += 1
    return CrossApplyReport(classifier_id, corpus_id or corpus.name or "corpus", classes,
                            counts, len(pred), stratify_by, strata)


@dataclass
class CooccurrenceReport:
    """Phi coefficients and joint counts between binarized features.

    ``ranked`` holds ``(i, j, phi, joint)`` for pairs ``i < j`` with at
    least ``min_count`` joint occurrences, by phi descending, then joint
    count descending, then index.
    """

    feature_names: list
    phi: np.ndarray
    joint: np.ndarray
    n_samples: int
    min_count: int
    ranked: list

    def rank_of(self, a: str, b: str) -> int | None:
        """1-based rank of the pair, or None if it was filtered out."""
        ia, ib = self.feature_names.index(a), self.feature_names.index(b)
        key = (min(ia, ib), max(ia, ib))
        for r, (i, j, _, _) in enumerate(self.ranked, start=1):
            if (i, j) == key:
                return r
        return None

    def top(self, k: int = 10) -> list[tuple[str, str, float, int]]:
        return [(self.feature_names[i], self.feature_names[j], p, c)
                for i, j, p, c in self.ranked[:k]]

    def to_csv(self, k: int | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "feature_a", "feature_b", "phi", "joint_count"])
        rows = self.ranked if k is None else self.ranked[:k]
        for r, (i, j, p, c) in enumerate(rows, start=1):
            w.writerow([r, self.feature_names[i], self.feature_names[j], f"{p:.6f}", c])
        return buf.getvalue()

    def to_text(self, k: int = 20) -> str:
        lines = [f"{len(self.ranked)} pairs with joint count >= {self.min_count} "
                 f"over {self.n_samples} turns"]
        for r, (a, b, p, c) in enumerate(self.top(k), start=1):
            lines.append(f"  {r:>3}. {a} + {b}: phi {p:+.4f} (joint {c})")
        return "\n".join(lines) + "\n"


def phi_matrix(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Phi coefficients and joint counts for the columns of a 0/1 matrix.

    Pairs involving a constant column have undefined phi, reported as 0.
    Computed from integer 2x2 tables so perfect association gives exactly 1.
    """
    B = np.asarray(B).astype(np.int64)
    n = B.shape[0]
    joint = B.T @ B
    ones = np.diag(joint).copy()
    num = (joint * n - np.outer(ones, ones)).astype(np.float64)
    var = (ones * (n - ones)).astype(np.float64)
    den = np.sqrt(np.outer(var, var))
    phi = np.zeros_like(num)
    ok = den > 0
    phi[ok] = num[ok] / den[ok]
    np.clip(phi, -1.0, 1.0, out=phi)
    return phi, joint


def cooccurrence_matrix(X, feature_names, min_count: int = 1) -> CooccurrenceReport:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty 2-d feature matrix")
    if min_count < 0:
        raise ValueError("min_count must be non-negative")
    phi, joint = phi_matrix(X > 0)
    d = X.shape[1]
    iu, ju = np.triu_indices(d, k=1)
    keep = joint[iu, ju] >= min_count
    iu, ju = iu[keep], ju[keep]
    order = np.lexsort((ju, iu, -joint[iu, ju], -phi[iu, ju]))
    ranked = [(int(iu[k]), int(ju[k]), float(phi[iu[k], ju[k]]), int(joint[iu[k], ju[k]]))
              for k in order]
    return CooccurrenceReport(list(feature_names), phi, joint, X.shape[0], min_count, ranked)


def cooccurrence(corpus: Corpus, min_count: int = 1,
                 lex: BehaviorLexicon | None = None) -> CooccurrenceReport:
    """Rank tag pairs of ``corpus`` by phi coefficient of presence."""
    lex = lex or default_lexicon()
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    return cooccurrence_matrix(corpus.feature_matrix(lex), lex.feature_names, min_count)
