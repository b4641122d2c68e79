"""Behavior lexicon: gestures, facial expressions and audio tags.

The lexicon fixes the feature vocabulary shared by every other module.
Gestures keep their library order; facial expressions and audio tags are
sorted alphabetically within their block.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

CHANNELS = ("gesture", "facial", "audio")

N_GESTURES = 72
N_FACIAL = 12
N_AUDIO = 10
N_FEATURES = N_GESTURES + N_FACIAL + N_AUDIO

FACIAL_NAMES = (
    "neutral", "scared", "angry", "surprised", "sad", "disgusted",
    "happy", "confident", "excited", "playful", "bored", "confused",
)
AUDIO_NAMES = (
    "pause", "deep inhale", "sharp exhale", "thoughtful", "urgent",
    "hesitant", "confused intonation", "excited intonation", "whisper",
    "clears throat",
)


class LexiconError(ValueError):
    """Raised when a lexicon document violates the registry contract."""


@dataclass(frozen=True)
class GestureSpec:
    name: str
    description: str
    duration: float

    @property
    def duration_ms(self) -> int:
        return int(round(self.duration * 1000))


@dataclass(frozen=True)
class FacialExpression:
    name: str
    aliases: frozenset = frozenset()


@dataclass(frozen=True)
class AudioTag:
    name: str
    aliases: frozenset = frozenset()


@dataclass(frozen=True)
class VocabularyEntry:
    index: int
    channel: str
    name: str


def _norm(name: str) -> str:
    return re.sub(r"\s+", " ", name.strip()).casefold()


@dataclass(frozen=True)
class BehaviorLexicon:
    """Immutable registries plus the derived feature vocabulary."""

    gestures: tuple
    facial: tuple
    audio: tuple
    vocabulary: tuple = field(init=False, repr=False)
    _lookup: Mapping = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        entries = []
        for g in self.gestures:
            entries.append(VocabularyEntry(len(entries), "gesture", g.name))
        for f in sorted(self.facial, key=lambda e: e.name):
            entries.append(VocabularyEntry(len(entries), "facial", f.name))
        for a in sorted(self.audio, key=lambda e: e.name):
            entries.append(VocabularyEntry(len(entries), "audio", a.name))
        object.__setattr__(self, "vocabulary", tuple(entries))

        lookup = {c: {} for c in CHANNELS}
        for e in entries:
            lookup[e.channel][_norm(e.name)] = e.index
        for channel, registry in (("facial", self.facial), ("audio", self.audio)):
            for item in registry:
                for alias in item.aliases:
                    key = _norm(alias)
                    prev = lookup[channel].get(key)
                    target = lookup[channel][_norm(item.name)]
                    if prev is not None and prev != target:
                        raise LexiconError(
                            f"alias {alias!r} maps to two {channel} entries")
                    lookup[channel][key] = target
        object.__setattr__(self, "_lookup", lookup)

    def __len__(self) -> int:
        return len(self.vocabulary)

    @property
    def n_features(self) -> int:
        return len(self.vocabulary)

    @property
    def feature_names(self) -> list[str]:
        return [e.name for e in self.vocabulary]

    def resolve(self, raw_name: str, channel: str) -> int | None:
        """Return the feature index for ``raw_name`` or None if unknown.

        Lookup is case-insensitive, collapses internal whitespace and
        honours the alias tables.
        """
        if channel not in CHANNELS:
            raise ValueError(f"unknown channel {channel!r}")
        return self._lookup[channel].get(_norm(raw_name))

    def index(self, name: str, channel: str) -> int:
        idx = self.resolve(name, channel)
        if idx is None:
            raise KeyError(f"{name!r} is not a known {channel} name")
        return idx

    def gesture(self, name: str) -> GestureSpec | None:
        idx = self.resolve(name, "gesture")
        return None if idx is None else self.gestures[idx]

    def entry(self, index: int) -> VocabularyEntry:
        return self.vocabulary[index]

    def channel_indices(self, channel: str) -> list[int]:
        return [e.index for e in self.vocabulary if e.channel == channel]

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "gestures": [
                {"name": g.name, "description": g.description,
                 "duration": g.duration}
                for g in self.gestures
            ],
            "facial": [{"name": f.name, "aliases": sorted(f.aliases)}
                       for f in self.facial],
            "audio": [{"name": a.name, "aliases": sorted(a.aliases)}
                      for a in self.audio],
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n",
                              encoding="utf-8")


def _check_unique(names: Iterable[str], what: str) -> None:
    seen = set()
    for n in names:
        key = _norm(n)
        if key in seen:
            raise LexiconError(f"duplicate {what} name {n!r}")
        seen.add(key)


def load_lexicon(source=None, *, standard_size: bool = True) -> BehaviorLexicon:
    """Build a lexicon from a mapping, a JSON path, or the bundled default.

    Parameters
    ----------
    source : mapping, str, Path or None
        Parsed document, path to a JSON document, or None for the default
        library.
    standard_size : bool
        Enforce 72 gestures, 12 facial expressions and 10 audio tags. Turn
        off to load alternative gesture libraries.
    """
    if source is None:
        return default_lexicon()
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise LexiconError(f"{source}: malformed lexicon document: {exc}") from exc
    else:
        doc = source
    return _from_document(doc, standard_size)


def _from_document(doc: Mapping, standard_size: bool) -> BehaviorLexicon:
    try:
        rows = doc["gestures"]
        facial_rows = doc["facial"]
        audio_rows = doc["audio"]
    except (KeyError, TypeError) as exc:
        raise LexiconError(f"lexicon document lacks section {exc}") from None

    gestures = []
    for i, row in enumerate(rows):
        try:
            name, desc, dur = row["name"], row["description"], row["duration"]
        except KeyError as exc:
            raise LexiconError(f"gesture row {i} lacks field {exc}") from None
        dur = float(dur)
        if not dur > 0:
            raise LexiconError(f"gesture {name!r} has non-positive duration {dur}")
        gestures.append(GestureSpec(str(name), str(desc), dur))

    facial = [FacialExpression(r["name"], frozenset(r.get("aliases", ())))
              for r in facial_rows]
    audio = [AudioTag(r["name"], frozenset(r.get("aliases", ())))
             for r in audio_rows]

    _check_unique((g.name for g in gestures), "gesture")
    _check_unique((f.name for f in facial), "facial")
    _check_unique((a.name for a in audio), "audio")

    if standard_size:
        for what, got, want in (("gesture", len(gestures), N_GESTURES),
                                ("facial", len(facial), N_FACIAL),
                                ("audio", len(audio), N_AUDIO)):
            if got != want:
                raise LexiconError(
                    f"{what} registry has {got} entries, expected {want}")
    return BehaviorLexicon(tuple(gestures), tuple(facial), tuple(audio))


@lru_cache(maxsize=1)
def default_lexicon() -> BehaviorLexicon:
    text = resources.files("trustcues").joinpath("data/lexicon.json").read_text(
        encoding="utf-8")
    return _from_document(json.loads(text), True)
