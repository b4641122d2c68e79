"""Parser and serializer for tag-augmented transcripts.

Grammar::

    transcript := (text | facial | gesture | audio)*
    facial     := "{" ws "f" ws ":" name "}"
    gesture    := "{" ws "g" ws ":" name "}"
    audio      := "[" name "]"

Text is kept verbatim. Each tag segment remembers the exact source slice it
came from, so ``serialize(parse(s)) == s`` holds byte for byte while tag
names themselves are whitespace-trimmed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator


class SegmentKind(str, Enum):
    TEXT = "Text"
    FACIAL = "FacialTag"
    GESTURE = "GestureTag"
    AUDIO = "AudioTag"


TAG_CHANNEL = {
    SegmentKind.FACIAL: "facial",
    SegmentKind.GESTURE: "gesture",
    SegmentKind.AUDIO: "audio",
}

_CURLY_PREFIX = {"f": SegmentKind.FACIAL, "g": SegmentKind.GESTURE}
_CURLY_RE = re.compile(r"\s*([A-Za-z])\s*:(.*)\Z", re.S)


class TranscriptError(ValueError):
    """Malformed transcript. ``offset`` is the 0-based character index."""

    def __init__(self, message: str, offset: int, raw: str | None = None):
        self.offset = offset
        self.raw = raw
        detail = f" (content {raw!r})" if raw is not None else ""
        super().__init__(f"{message} at offset {offset}{detail}")


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    payload: str
    char_offset: int
    raw: str | None = field(default=None, compare=False)

    @property
    def is_tag(self) -> bool:
        return self.kind is not SegmentKind.TEXT

    @property
    def channel(self) -> str | None:
        return TAG_CHANNEL.get(self.kind)

    def render(self) -> str:
        if self.raw is not None:
            return self.raw
        return render_tag(self.kind, self.payload)


def render_tag(kind: SegmentKind, payload: str) -> str:
    if kind is SegmentKind.TEXT:
        return payload
    if kind is SegmentKind.AUDIO:
        return f"[{payload}]"
    prefix = "f" if kind is SegmentKind.FACIAL else "g"
    return f"{{{prefix}: {payload}}}"


@dataclass(frozen=True)
class AugmentedTranscript:
    segments: tuple
    source: str

    @classmethod
    def from_segments(cls, parts: Iterable[tuple]) -> "AugmentedTranscript":
        """Build a transcript from ``(kind, payload)`` pairs.

        Adjacent text parts are merged; offsets are recomputed.
        """
        segments: list[Segment] = []
        pos = 0
        chunks = []
        for kind, payload in parts:
            kind = SegmentKind(kind)
            if kind is SegmentKind.TEXT:
                if not payload:
                    continue
                if segments and segments[-1].kind is SegmentKind.TEXT:
                    last = segments.pop()
                    payload = last.payload + payload
                    pos = last.char_offset
                    chunks.pop()
            else:
                payload = payload.strip()
            raw = render_tag(kind, payload)
            segments.append(Segment(kind, payload, pos, raw))
            chunks.append(raw)
            pos += len(raw)
        return cls(tuple(segments), "".join(chunks))

    @property
    def tags(self) -> list[Segment]:
        return [s for s in self.segments if s.is_tag]

    @property
    def texts(self) -> list[Segment]:
        return [s for s in self.segments if not s.is_tag]

    def plain_text(self) -> str:
        return "".join(s.payload for s in self.texts)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)


def _tag_segment(source: str, start: int, end: int, opener: str) -> Segment:
    raw = source[start:end + 1]
    inner = source[start + 1:end]
    if opener == "[":
        name = inner.strip()
        if not name:
            raise TranscriptError("empty audio tag", start, raw)
        return Segment(SegmentKind.AUDIO, name, start, raw)
    m = _CURLY_RE.match(inner)
    if m is None or m.group(1).lower() not in _CURLY_PREFIX:
        raise TranscriptError("brace tag without f:/g: prefix", start, raw)
    name = m.group(2).strip()
    if not name:
        raise TranscriptError("empty tag name", start, raw)
    return Segment(_CURLY_PREFIX[m.group(1).lower()], name, start, raw)


def parse(source: str) -> AugmentedTranscript:
    """Split ``source`` into text and tag segments.

    Raises
    ------
    TranscriptError
        On unbalanced or nested delimiters and on brace tags whose prefix is
        neither ``f:`` nor ``g:``.
    """
    closers = {"{": "}", "[": "]"}
    segments: list[Segment] = []
    open_at = -1
    opener = ""
    text_start = 0
    for i, ch in enumerate(source):
        if ch in closers:
            if open_at >= 0:
                raise TranscriptError("nested tag", i, source[open_at:i + 1])
            if i > text_start:
                segments.append(Segment(SegmentKind.TEXT, source[text_start:i],
                                        text_start, source[text_start:i]))
            open_at, opener = i, ch
        elif ch in "}]":
            if open_at < 0 or closers[opener] != ch:
                raise TranscriptError(f"unbalanced delimiter {ch!r}", i)
            segments.append(_tag_segment(source, open_at, i, opener))
            open_at = -1
            text_start = i + 1
    if open_at >= 0:
        raise TranscriptError(f"unbalanced delimiter {opener!r}", open_at)
    if text_start < len(source):
        segments.append(Segment(SegmentKind.TEXT, source[text_start:],
                                text_start, source[text_start:]))
    return AugmentedTranscript(tuple(segments), source)


def serialize(t: AugmentedTranscript) -> str:
    return "".join(s.render() for s in t.segments)


# -- emphasis -------------------------------------------------------------

class EmphasisKind(str, Enum):
    CAPS = "Caps"
    ELLIPSIS = "Ellipsis"
    PUNCTUATION = "ExclamationOrQuestion"
    REPETITION = "Repetition"


@dataclass(frozen=True)
class EmphasisAnnotation:
    start: int
    end: int
    kind: EmphasisKind

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


_ELLIPSIS_RE = re.compile(r"\.\.\.|\u2026")
_PUNCT_RE = re.compile(r"[!?]")
_WORD_RE = re.compile(r"[^\W_]+(?:['\u2019][^\W_]+)*")


def _is_caps_word(word: str) -> bool:
    letters = [c for c in word if c.isalpha()]
    return len(letters) >= 2 and all(c.isupper() for c in letters)


def detect_emphasis(t: AugmentedTranscript) -> list[EmphasisAnnotation]:
    """Find emphasis devices inside text segments.

    Offsets are absolute positions in ``t.source``. Repetition only covers
    a word immediately repeated (``yeah, yeah``); this is a heuristic.
    """
    found: list[EmphasisAnnotation] = []
    for seg in t.texts:
        text, base = seg.payload, seg.char_offset
        for m in _WORD_RE.finditer(text):
            if _is_caps_word(m.group()):
                found.append(EmphasisAnnotation(base + m.start(), base + m.end(),
                                                EmphasisKind.CAPS))
        for m in _ELLIPSIS_RE.finditer(text):
            found.append(EmphasisAnnotation(base + m.start(), base + m.end(),
                                            EmphasisKind.ELLIPSIS))
        for m in _PUNCT_RE.finditer(text):
            found.append(EmphasisAnnotation(base + m.start(), base + m.end(),
                                            EmphasisKind.PUNCTUATION))
        words = list(_WORD_RE.finditer(text))
        for prev, cur in zip(words, words[1:]):
            between = text[prev.end():cur.start()]
            if (prev.group().casefold() == cur.group().casefold()
                    and re.fullmatch(r"[\s,;.!?\-\u2014]*", between)):
                found.append(EmphasisAnnotation(base + prev.start(), base + cur.end(),
                                                EmphasisKind.REPETITION))
    found.sort(key=lambda a: (a.start, a.end, a.kind.value))
    return found


def read_turns(path) -> list[str]:
    """Read a line-delimited file with one speech turn per line."""
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n").rstrip("\r") for line in fh if line.strip()]
