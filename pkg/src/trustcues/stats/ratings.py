"""Likert rating records, the mean-score table and per-subject matrices."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..featurize import LEVELS

LIKERT_MIN, LIKERT_MAX = -2, 2


class RatingError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class RatingRecord:
    participant: str
    condition: str
    item: str
    response: int
    study: str = ""

    def __post_init__(self):
        if self.condition not in LEVELS:
            raise RatingError(f"condition {self.condition!r} is not one of {list(LEVELS)}")
        if isinstance(self.response, bool) or not isinstance(self.response, (int, np.integer)):
            raise RatingError(f"response {self.response!r} is not an integer")
        if not LIKERT_MIN <= self.response <= LIKERT_MAX:
            raise RatingError(f"response {self.response} outside [{LIKERT_MIN}, {LIKERT_MAX}]")


@dataclass(frozen=True)
class Item:
    id: str
    scale: str
    label: str


ITEMS = (
    Item("ability_knowledge", "ability", "Confident in its path knowledge"),
    Item("ability_capable", "ability", "Capable of showing the path"),
    Item("benevolence_help", "benevolence", "Would go out of its way to help"),
    Item("benevolence_needs", "benevolence", "Values my needs"),
    Item("trust_follow", "trust", "Trust: would follow its advice"),
    Item("human_behavior", "human", "Human behavior: seems human"),
)
ITEM_BY_ID = {it.id: it for it in ITEMS}
# Table rows: items interleaved with the two scale aggregates.
TABLE_ROWS = ("ability_knowledge", "ability_capable", "mean:ability",
              "benevolence_help", "benevolence_needs", "mean:benevolence",
              "trust_follow", "human_behavior")
STUDIES = ("Ability", "Benevolence")


def validate_records(records) -> list[RatingRecord]:
    seen = set()
    out = []
    for r in records:
        key = (r.study, r.participant, r.condition, r.item)
        if key in seen:
            raise RatingError(f"duplicate rating for participant {r.participant!r}, "
                              f"condition {r.condition}, item {r.item!r}")
        seen.add(key)
        out.append(r)
    return out


def read_ratings(path) -> list[RatingRecord]:
    """Read a delimited file with header ``participant,condition,item,response``
    and an optional ``study`` column. Tab-delimited if the header has tabs."""
    text = Path(path).read_text(encoding="utf-8")
    first = text.split("\n", 1)[0]
    reader = csv.DictReader(io.StringIO(text), delimiter="\t" if "\t" in first else ",")
    need = {"participant", "condition", "item", "response"}
    if reader.fieldnames is None or not need <= {f.strip() for f in reader.fieldnames}:
        raise RatingError(f"header must contain {sorted(need)}", 1)
    records = []
    for lineno, row in enumerate(reader, start=2):
        row = {(k or "").strip(): (v or "").strip() for k, v in row.items()}
        try:
            response = int(row["response"])
        except ValueError:
            raise RatingError(f"response {row['response']!r} is not an integer", lineno) from None
        try:
            records.append(RatingRecord(row["participant"], row["condition"], row["item"],
                                        response, row.get("study", "")))
        except RatingError as exc:
            raise RatingError(str(exc), lineno) from None
    try:
        return validate_records(records)
    except RatingError as exc:
        raise RatingError(str(exc)) from None


def write_ratings(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["study", "participant", "condition", "item", "response"])
        for r in records:
            w.writerow([r.study, r.participant, r.condition, r.item, r.response])


@dataclass
class ScoreTable:
    """Mean response per row (item or scale aggregate) and (study, condition) column."""

    rows: tuple
    columns: list
    values: dict

    def value(self, row: str, study: str, condition: str) -> float:
        return self.values[(row, study, condition)]

    def row_label(self, row: str) -> str:
        if row.startswith("mean:"):
            return "Mean " + row.split(":", 1)[1].capitalize()
        return ITEM_BY_ID[row].label if row in ITEM_BY_ID else row

    def to_text(self) -> str:
        labels = [self.row_label(r) for r in self.rows]
        width = max(len(s) for s in labels + ["Instructed behavior"])
        studies = []
        for s, _ in self.columns:
            if s not in studies:
                studies.append(s)
        head1 = " ".join(f"{s or 'All':^26}" for s in studies)
        head2 = " ".join(" ".join(f"{c:>8}" for s2, c in self.columns if s2 == s)
                         for s in studies)
        lines = [f"{'':<{width}} | {head1}", f"{'Instructed behavior':<{width}} | {head2}"]
        for r, label in zip(self.rows, labels):
            cells = " ".join(" ".join(f"{self.values[(r, s, c)]:8.2f}"
                                      for s2, c in self.columns if s2 == s) for s in studies)
            lines.append(f"{label:<{width}} | {cells}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row"] + [f"{s}:{c}" if s else c for s, c in self.columns])
        for r in self.rows:
            w.writerow([self.row_label(r)] + [f"{self.values[(r, s, c)]:.6f}"
                                              for s, c in self.columns])
        return buf.getvalue()


def _ordered_studies(records) -> list[str]:
    present = {r.study for r in records}
    return [s for s in STUDIES if s in present] + sorted(present - set(STUDIES))


def score_table(records, rows=TABLE_ROWS) -> ScoreTable:
    """Per-item means by study and condition, plus scale aggregates.

    A scale aggregate is the mean of its items' means.
    """
    records = validate_records(records)
    if not records:
        raise RatingError("no ratings")
    sums: dict = {}
    for r in records:
        acc = sums.setdefault((r.item, r.study, r.condition), [0, 0])
        acc[0] += r.response
        acc[1] += 1
    columns = [(s, c) for s in _ordered_studies(records) for c in LEVELS]
    item_mean = {k: v[0] / v[1] for k, v in sums.items()}
    values = {}
    for row in rows:
        for s, c in columns:
            if row.startswith("mean:"):
                scale = row.split(":", 1)[1]
                parts = [item_mean[(it.id, s, c)] for it in ITEMS
                         if it.scale == scale and (it.id, s, c) in item_mean]
                if not parts:
                    raise RatingError(f"no {scale} items rated in {s or 'all'}/{c}")
                values[(row, s, c)] = float(np.mean(parts))
            elif (row, s, c) in item_mean:
                values[(row, s, c)] = item_mean[(row, s, c)]
            else:
                raise RatingError(f"empty cell: item {row!r}, study {s or 'all'!r}, "
                                  f"condition {c}")
    return ScoreTable(tuple(rows), columns, values)


def subject_matrix(records, items, *, study: str | None = None,
                   conditions=LEVELS) -> tuple[list[str], np.ndarray]:
    """Per-participant mean response over ``items`` for each condition.

    Returns participant ids and an (n_participants, n_conditions) matrix.
    Raises if a participant lacks any condition.
    """
    items = set([items] if isinstance(items, str) else items)
    acc: dict = {}
    for r in records:
        if r.item in items and (study is None or r.study == study):
            cell = acc.setdefault(r.participant, {}).setdefault(r.condition, [0, 0])
            cell[0] += r.response
            cell[1] += 1
    if not acc:
        raise RatingError("no ratings match the requested items")
    participants = sorted(acc)
    Y = np.empty((len(participants), len(conditions)))
    for i, pid in enumerate(participants):
        for j, c in enumerate(conditions):
            cell = acc[pid].get(c)
            if cell is None:
                raise RatingError(f"incomplete design: participant {pid!r} has no "
                                  f"ratings in condition {c}")
            Y[i, j] = cell[0] / cell[1]
    return participants, Y


def synthetic_ratings(n_participants: int = 30, *, seed: int = 0,
                      effects=None, noise: float = 0.8) -> list[RatingRecord]:
    """Simulated within-subject ratings for both studies.

    ``effects`` maps condition to a shift added to every latent score.
    """
    effects = effects or {"Low": -0.4, "Medium": 0.6, "High": 0.6}
    rng = np.random.default_rng(seed)
    out = []
    for study in STUDIES:
        for p in range(n_participants):
            pid = f"{study[0]}{p:03d}"
            bias = rng.normal(0, 0.4)
            for c in LEVELS:
                for it in ITEMS:
                    latent = effects[c] + bias + rng.normal(0, noise)
                    out.append(RatingRecord(pid, c, it.id,
                                            int(np.clip(np.rint(latent), LIKERT_MIN, LIKERT_MAX)),
                                            study))
    return out
