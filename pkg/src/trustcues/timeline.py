"""Compile tagged transcripts into timed multimodal behavior schedules.

All times are integer milliseconds. Words are timed at a constant speaking
rate; a tag fires at the speech clock where it sits in the transcript.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .lexicon import BehaviorLexicon, default_lexicon
from .transcript import AugmentedTranscript, SegmentKind, parse

TIMELINE_FORMAT = "trustcues-timeline"
TIMELINE_VERSION = 1

GESTURE, FACE, VOICE = "Gesture", "Face", "Voice"
CHANNEL_OF = {SegmentKind.GESTURE: GESTURE, SegmentKind.FACIAL: FACE,
              SegmentKind.AUDIO: VOICE}
_LEX_CHANNEL = {GESTURE: "gesture", FACE: "facial", VOICE: "audio"}
_CHANNEL_ORDER = {GESTURE: 0, FACE: 1, VOICE: 2}
POLICIES = ("queue", "cut-previous", "drop-new")
PAUSE_TAG = "pause"
_ELLIPSIS = re.compile(r"\.\.\.|…")


class TimelineError(ValueError):
    pass


@dataclass(frozen=True)
class TimingConfig:
    """Speaking-rate model and collision policy.

    Parameters
    ----------
    words_per_minute : float
    pause_ms : int
        Silence inserted at each pause tag and after each word holding an
        ellipsis.
    policy : {"queue", "cut-previous", "drop-new"}
        How a gesture requested while another is playing is handled.
    strict : bool
        Raise on tag names the lexicon does not know instead of dropping.
    min_face_ms : int
        Floor for the duration of the final facial expression.
    """

    words_per_minute: float = 160.0
    pause_ms: int = 400
    policy: str = "queue"
    strict: bool = False
    min_face_ms: int = 1000

    def __post_init__(self):
        if not self.words_per_minute > 0:
            raise TimelineError("words_per_minute must be positive")
        if self.pause_ms < 0 or self.min_face_ms <= 0:
            raise TimelineError("pause_ms must be non-negative and min_face_ms positive")
        if self.policy not in POLICIES:
            raise TimelineError(f"policy must be one of {POLICIES}")

    @property
    def word_ms(self) -> int:
        return round(60000 / self.words_per_minute)


@dataclass(frozen=True)
class TimelineEvent:
    channel: str
    name: str
    start_ms: int
    duration_ms: int
    offset: int

    @property
    def end_ms(self) -> int:
        return self.start_ms + self.duration_ms

    @property
    def start(self) -> float:
        return self.start_ms / 1000

    @property
    def duration(self) -> float:
        return self.duration_ms / 1000


@dataclass(frozen=True)
class SpeechInterval:
    word: str
    start_ms: int
    end_ms: int


@dataclass(frozen=True)
class Drop:
    channel: str
    name: str
    offset: int
    reason: str


@dataclass
class BehaviorTimeline:
    events: list = field(default_factory=list)
    speech: list = field(default_factory=list)
    drops: list = field(default_factory=list)
    total_ms: int = 0
    policy: str = "queue"

    def channel(self, name: str) -> list[TimelineEvent]:
        return [e for e in self.events if e.channel == name]

    def to_dict(self) -> dict:
        return {
            "format": TIMELINE_FORMAT,
            "version": TIMELINE_VERSION,
            "policy": self.policy,
            "total_ms": self.total_ms,
            "events": [asdict(e) for e in self.events],
            "speech": [asdict(s) for s in self.speech],
            "drops": [asdict(d) for d in self.drops],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BehaviorTimeline":
        if doc.get("format") != TIMELINE_FORMAT:
            raise TimelineError("not a timeline document")
        if doc.get("version") != TIMELINE_VERSION:
            raise TimelineError(f"unsupported timeline version {doc.get('version')}")
        try:
            return cls(
                events=[TimelineEvent(**e) for e in doc["events"]],
                speech=[SpeechInterval(**s) for s in doc["speech"]],
                drops=[Drop(**d) for d in doc["drops"]],
                total_ms=int(doc["total_ms"]),
                policy=doc.get("policy", "queue"),
            )
        except (KeyError, TypeError) as exc:
            raise TimelineError(f"malformed timeline document: {exc}") from None


def dumps(tl: BehaviorTimeline) -> str:
    return json.dumps(tl.to_dict(), indent=1, ensure_ascii=False) + "\n"


def loads(text: str) -> BehaviorTimeline:
    return BehaviorTimeline.from_dict(json.loads(text))


def export(tl: BehaviorTimeline, path) -> None:
    Path(path).write_text(dumps(tl), encoding="utf-8")


def load(path) -> BehaviorTimeline:
    return loads(Path(path).read_text(encoding="utf-8"))


def _schedule_gesture(name, req, duration, offset, gestures, drops, policy):
    if gestures:
        prev = gestures[-1]
        if req < prev.end_ms:
            if policy == "queue":
                req = prev.end_ms
            elif policy == "drop-new":
                drops.append(Drop(GESTURE, name, offset, "overlap"))
                return
            else:
                cut = req - prev.start_ms
                gestures.pop()
                if cut > 0:
                    gestures.append(TimelineEvent(GESTURE, prev.name, prev.start_ms, cut,
                                                  prev.offset))
                else:
                    drops.append(Drop(GESTURE, prev.name, prev.offset, "cut"))
    gestures.append(TimelineEvent(GESTURE, name, req, duration, offset))


def compile_timeline(t: AugmentedTranscript | str, lex: BehaviorLexicon | None = None,
                     config: TimingConfig | None = None) -> BehaviorTimeline:
    """Schedule every tag of ``t`` or record why it was dropped."""
    if isinstance(t, str):
        t = parse(t)
    lex = lex or default_lexicon()
    cfg = config or TimingConfig()
    word_ms = cfg.word_ms
    pause_idx = lex.resolve(PAUSE_TAG, "audio")

    clock = 0
    speech: list[SpeechInterval] = []
    # Words of each text segment, as (first, last) indices into ``speech``.
    seg_words: dict[int, tuple[int, int]] = {}
    tags = []  # (segment index, channel, canonical name or None, raw name, clock, offset)
    for si, seg in enumerate(t.segments):
        if seg.kind is SegmentKind.TEXT:
            words = seg.payload.split()
            first = len(speech)
            for w in words:
                speech.append(SpeechInterval(w, clock, clock + word_ms))
                clock += word_ms
                if _ELLIPSIS.search(w):
                    clock += cfg.pause_ms
            if words:
                seg_words[si] = (first, len(speech) - 1)
            continue
        channel = CHANNEL_OF[seg.kind]
        idx = lex.resolve(seg.payload, _LEX_CHANNEL[channel])
        if idx is None and cfg.strict:
            raise TimelineError(f"unknown {channel.lower()} tag {seg.payload!r} "
                                f"at offset {seg.char_offset}")
        name = None if idx is None else lex.entry(idx).name
        tags.append((si, channel, name, seg.payload, clock, seg.char_offset, idx))
        if idx is not None and idx == pause_idx:
            clock += cfg.pause_ms

    gestures: list[TimelineEvent] = []
    faces: list[TimelineEvent] = []
    voices: list[TimelineEvent] = []
    drops: list[Drop] = []
    for si, channel, name, raw, at, offset, idx in tags:
        if name is None:
            drops.append(Drop(channel, raw, offset, "unknown"))
        elif channel == GESTURE:
            _schedule_gesture(name, at, lex.gesture(name).duration_ms, offset,
                              gestures, drops, cfg.policy)
        elif channel == FACE:
            if faces and faces[-1].start_ms == at:
                old = faces.pop()
                drops.append(Drop(FACE, old.name, old.offset, "superseded"))
            faces.append(TimelineEvent(FACE, name, at, 0, offset))
        elif idx == pause_idx:
            if cfg.pause_ms > 0:
                voices.append(TimelineEvent(VOICE, name, at, cfg.pause_ms, offset))
            else:
                drops.append(Drop(VOICE, name, offset, "zero-length"))
        else:
            span = next((seg_words[j] for j in range(si + 1, len(t.segments))
                         if j in seg_words), None)
            if span is None:
                span = next((seg_words[j] for j in range(si - 1, -1, -1)
                             if j in seg_words), None)
            if span is None:
                voices.append(TimelineEvent(VOICE, name, at, word_ms, offset))
            else:
                start, end = speech[span[0]].start_ms, speech[span[1]].end_ms
                voices.append(TimelineEvent(VOICE, name, start, end - start, offset))

    total = max([clock] + [e.end_ms for e in gestures + voices])
    for k, face in enumerate(faces):
        if k + 1 < len(faces):
            end = faces[k + 1].start_ms
        else:
            end = max(total, face.start_ms + cfg.min_face_ms)
        faces[k] = TimelineEvent(FACE, face.name, face.start_ms, end - face.start_ms,
                                 face.offset)
    events = gestures + faces + voices
    total = max([total] + [e.end_ms for e in events])
    events.sort(key=lambda e: (e.start_ms, _CHANNEL_ORDER[e.channel], e.offset))
    drops.sort(key=lambda d: d.offset)
    return BehaviorTimeline(events, speech, drops, total, cfg.policy)
