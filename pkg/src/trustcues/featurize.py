"""Count-vector featurization and corpus persistence.

Corpus files are UTF-8 JSON lines. The first line is a header object with
``"kind": "corpus-header"``; every following line is one speech turn with
the fields ``turn_id``, ``trait``, ``level``, ``gender`` and ``raw``.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .lexicon import BehaviorLexicon, default_lexicon
from .transcript import AugmentedTranscript, TranscriptError, parse

CORPUS_FORMAT_VERSION = 1


class Trait(str, Enum):
    ABILITY = "Ability"
    BENEVOLENCE = "Benevolence"
    NONE = "None"


class Level(str, Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


class Gender(str, Enum):
    MALE = "Male"
    FEMALE = "Female"


LEVELS = tuple(lv.value for lv in Level)
GENDERS = tuple(g.value for g in Gender)

# Fixed label order used for tie-breaks and report columns.
LABEL_ORDER = {"level": LEVELS, "gender": GENDERS}


class CorpusError(ValueError):
    def __init__(self, message: str, line: int | None = None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class UnknownTag(NamedTuple):
    channel: str
    name: str
    char_offset: int


class Featurization(NamedTuple):
    counts: np.ndarray
    unknown: list


def featurize(t: AugmentedTranscript | str,
              lex: BehaviorLexicon | None = None) -> Featurization:
    """Count resolved tag occurrences in one turn.

    Unknown tag names go to the side report and never touch the vector.
    Emphasis devices carry no weight.
    """
    lex = lex or default_lexicon()
    if isinstance(t, str):
        t = parse(t)
    counts = np.zeros(lex.n_features, dtype=np.int64)
    unknown = []
    for seg in t.tags:
        idx = lex.resolve(seg.payload, seg.channel)
        if idx is None:
            unknown.append(UnknownTag(seg.channel, seg.payload, seg.char_offset))
        else:
            counts[idx] += 1
    return Featurization(counts, unknown)


@dataclass
class LabeledSample:
    turn_id: str
    raw: str
    trait: Trait = Trait.NONE
    level: Level | None = None
    gender: Gender | None = None
    features: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.trait = Trait(self.trait)
        self.level = None if self.level is None else Level(self.level)
        self.gender = None if self.gender is None else Gender(self.gender)
        if (self.level is None) != (self.trait is Trait.NONE):
            raise ValueError(
                f"turn {self.turn_id}: level must be set iff trait is not None")

    def label(self, target: str) -> str | None:
        value = getattr(self, target)
        return None if value is None else value.value

    def to_record(self) -> dict:
        return {
            "turn_id": self.turn_id,
            "trait": self.trait.value,
            "level": None if self.level is None else self.level.value,
            "gender": None if self.gender is None else self.gender.value,
            "raw": self.raw,
        }


@dataclass
class Corpus:
    samples: list
    trait: Trait = Trait.NONE
    gender_conditioned: bool = False
    provenance: str = "offline-synth"
    created: str = ""
    name: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.trait = Trait(self.trait)
        seen = set()
        for s in self.samples:
            if s.trait is not self.trait:
                raise ValueError(
                    f"turn {s.turn_id} has trait {s.trait.value}, corpus is "
                    f"{self.trait.value}")
            if s.turn_id in seen:
                raise ValueError(f"duplicate turn_id {s.turn_id!r}")
            seen.add(s.turn_id)

    def __len__(self) -> int:
        return len(self.samples)

    def labels(self, target: str) -> np.ndarray:
        if target not in LABEL_ORDER:
            raise ValueError(f"unknown target {target!r}")
        values = [s.label(target) for s in self.samples]
        if any(v is None for v in values):
            raise ValueError(f"corpus has samples without a {target} label")
        return np.asarray(values, dtype=object)

    def raws(self) -> list[str]:
        return [s.raw for s in self.samples]

    def feature_matrix(self, lex: BehaviorLexicon | None = None) -> np.ndarray:
        lex = lex or default_lexicon()
        rows = []
        for s in self.samples:
            if s.features is None or len(s.features) != lex.n_features:
                try:
                    s.features = featurize(s.raw, lex).counts
                except TranscriptError as exc:
                    raise CorpusError(f"turn {s.turn_id}: {exc}") from exc
            rows.append(s.features)
        if not rows:
            return np.zeros((0, lex.n_features), dtype=np.int64)
        return np.vstack(rows)

    def header(self) -> dict:
        return {
            "kind": "corpus-header",
            "version": CORPUS_FORMAT_VERSION,
            "name": self.name,
            "trait": self.trait.value,
            "gender_conditioned": self.gender_conditioned,
            "provenance": self.provenance,
            "created": self.created,
            "size": len(self.samples),
            "extra": self.extra,
        }


def creation_timestamp(deterministic: bool) -> str:
    """UTC timestamp for corpus headers.

    Deterministic runs take ``SOURCE_DATE_EPOCH`` (default 0) so repeated
    offline generations are byte-identical.
    """
    if deterministic:
        epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
        when = datetime.fromtimestamp(epoch, tz=timezone.utc)
    else:
        when = datetime.now(tz=timezone.utc).replace(microsecond=0)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def save_corpus(corpus: Corpus, path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps(corpus.header()) + "\n")
        for s in corpus.samples:
            fh.write(_dumps(s.to_record()) + "\n")
    os.replace(tmp, path)


def _sample_from_record(rec, lineno: int, path) -> LabeledSample:
    if not isinstance(rec, dict):
        raise CorpusError("record is not an object", lineno, path)
    missing = {"turn_id", "trait", "level", "gender", "raw"} - rec.keys()
    if missing:
        raise CorpusError(f"record lacks fields {sorted(missing)}", lineno, path)
    for key, enum in (("trait", Trait), ("level", Level), ("gender", Gender)):
        value = rec[key]
        if value is None and key != "trait":
            continue
        try:
            enum(value)
        except ValueError:
            raise CorpusError(f"{key} {value!r} is not one of "
                              f"{[e.value for e in enum]}", lineno, path) from None
    if not isinstance(rec["raw"], str) or not isinstance(rec["turn_id"], str):
        raise CorpusError("turn_id and raw must be strings", lineno, path)
    try:
        return LabeledSample(rec["turn_id"], rec["raw"], rec["trait"],
                             rec["level"], rec["gender"])
    except ValueError as exc:
        raise CorpusError(str(exc), lineno, path) from None


def iter_corpus_lines(path, *, tolerate_truncation: bool = False):
    """Yield ``(lineno, header_or_None, sample)`` for each line of a corpus.

    With ``tolerate_truncation`` a malformed final line (an interrupted
    write) is skipped instead of raising.
    """
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for i, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            if tolerate_truncation and i == len(lines):
                return
            raise CorpusError(f"malformed JSON record: {exc.msg}", i, path) from None
        if isinstance(rec, dict) and rec.get("kind") == "corpus-header":
            if i != 1:
                raise CorpusError("header must be the first line", i, path)
            yield i, rec, None
        else:
            yield i, None, _sample_from_record(rec, i, path)


def load_corpus(path) -> Corpus:
    header = {}
    samples = []
    seen: dict[str, int] = {}
    for lineno, head, sample in iter_corpus_lines(path):
        if head is not None:
            header = head
            continue
        if sample.turn_id in seen:
            raise CorpusError(f"duplicate turn_id {sample.turn_id!r} "
                              f"(first at line {seen[sample.turn_id]})", lineno, path)
        seen[sample.turn_id] = lineno
        samples.append(sample)
    trait = header.get("trait")
    if trait is None:
        trait = samples[0].trait if samples else Trait.NONE
    try:
        return Corpus(
            samples,
            trait=trait,
            gender_conditioned=bool(header.get("gender_conditioned", False)),
            provenance=header.get("provenance", "unknown"),
            created=header.get("created", ""),
            name=header.get("name", ""),
            extra=header.get("extra", {}),
        )
    except ValueError as exc:
        raise CorpusError(str(exc), path=path) from None


class TagCountVectorizer(TransformerMixin, BaseEstimator):
    """Turn raw tag-augmented transcripts into tag count vectors.

    Parameters
    ----------
    lexicon : BehaviorLexicon or None
        Vocabulary to count against; the default library when None.
    strict : bool
        Raise on unknown tag names instead of reporting them.
    """

    def __init__(self, lexicon: BehaviorLexicon | None = None, strict: bool = False):
        self.lexicon = lexicon
        self.strict = strict

    def fit(self, X: Iterable[str] = None, y=None):
        lex = self.lexicon or default_lexicon()
        self.lexicon_ = lex
        self.n_features_out_ = lex.n_features
        self.feature_names_out_ = np.asarray(lex.feature_names, dtype=object)
        return self

    def transform(self, X: Sequence[str]) -> np.ndarray:
        if not hasattr(self, "lexicon_"):
            self.fit()
        if isinstance(X, str):
            raise ValueError("expected a sequence of transcripts, got a single string")
        rows = []
        self.unknown_ = []
        for i, raw in enumerate(X):
            res = featurize(raw, self.lexicon_)
            if res.unknown:
                if self.strict:
                    u = res.unknown[0]
                    raise ValueError(f"row {i}: unknown {u.channel} tag {u.name!r} "
                                     f"at offset {u.char_offset}")
                self.unknown_.append((i, res.unknown))
            rows.append(res.counts)
        if not rows:
            return np.zeros((0, self.n_features_out_), dtype=np.int64)
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None):
        if not hasattr(self, "lexicon_"):
            self.fit()
        return self.feature_names_out_.copy()
