import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TABLE1, TABLE1_COUNTS
from trustcues.featurize import featurize
from trustcues.transcript import (AugmentedTranscript, EmphasisKind, SegmentKind,
                                  TranscriptError, detect_emphasis, parse, read_turns,
                                  serialize)


@pytest.mark.parametrize("key", sorted(TABLE1))
def test_example_rows_round_trip(key):
    src = TABLE1[key]
    assert serialize(parse(src)) == src


@pytest.mark.parametrize("key", sorted(TABLE1))
def test_example_rows_counts(key, lex):
    res = featurize(TABLE1[key], lex)
    assert res.unknown == []
    nonzero = {int(i): int(res.counts[i]) for i in np.flatnonzero(res.counts)}
    assert nonzero == TABLE1_COUNTS[key]


def test_segment_kinds_and_offsets():
    t = parse("Hi {f: happy}there[pause]{g:Clap}.")
    assert [s.kind for s in t] == [SegmentKind.TEXT, SegmentKind.FACIAL, SegmentKind.TEXT,
                                   SegmentKind.AUDIO, SegmentKind.GESTURE, SegmentKind.TEXT]
    assert [s.char_offset for s in t] == [0, 3, 13, 18, 25, 33]
    assert [s.payload for s in t.tags] == ["happy", "pause", "Clap"]
    assert t.plain_text() == "Hi there."


def test_whitespace_inside_tags_is_trimmed_but_preserved_on_output():
    src = "{  g :  Hard Head Nod  }[  pause ]"
    t = parse(src)
    assert [s.payload for s in t.tags] == ["Hard Head Nod", "pause"]
    assert serialize(t) == src


def test_adjacent_tags_without_text():
    t = parse("{f: happy}{g: Clap}[whisper]")
    assert len(t.texts) == 0 and len(t.tags) == 3


def test_empty_transcript():
    t = parse("")
    assert len(t) == 0 and serialize(t) == ""


@pytest.mark.parametrize("src,offset", [
    ("hello {f: happy", 6),
    ("hello } there", 6),
    ("a [pause} b", 8),
    ("{f: happy [pause]}", 10),
    ("x {h: happy}", 2),
    ("x {happy}", 2),
    ("[ ]", 0),
    ("{g:   }", 0),
])
def test_malformed_inputs_report_offset(src, offset):
    with pytest.raises(TranscriptError) as info:
        parse(src)
    assert info.value.offset == offset


def test_from_segments_merges_text():
    t = AugmentedTranscript.from_segments([
        ("Text", "a"), ("Text", "b"), ("FacialTag", " happy "), ("Text", "")])
    assert t.source == "ab{f: happy}"
    assert parse(t.source).tags[0].payload == "happy"


def test_emphasis_detection():
    src = "Go NOW... {g: Clap} yes, yes! Really?"
    t = parse(src)
    found = {(src[a.start:a.end], a.kind) for a in detect_emphasis(t)}
    assert ("NOW", EmphasisKind.CAPS) in found
    assert ("...", EmphasisKind.ELLIPSIS) in found
    assert ("yes, yes", EmphasisKind.REPETITION) in found
    assert ("!", EmphasisKind.PUNCTUATION) in found
    assert ("?", EmphasisKind.PUNCTUATION) in found
    # Single capital letters are not emphasis.
    assert not any(k is EmphasisKind.CAPS for _, k in
                   {(src[a.start:a.end], a.kind) for a in detect_emphasis(parse("I go"))})


def test_emphasis_does_not_change_counts(lex):
    a = featurize("{g: Clap} go now", lex).counts
    b = featurize("{g: Clap} GO NOW... now now!", lex).counts
    assert np.array_equal(a, b)


def test_read_turns(tmp_path):
    p = tmp_path / "turns.txt"
    p.write_text("one {g: Clap}\n\n two\r\n", encoding="utf-8")
    assert read_turns(p) == ["one {g: Clap}", " two"]


_text = st.text(alphabet=st.characters(blacklist_characters="{}[]", blacklist_categories=("Cs",)),
                max_size=12)
_name = st.text(alphabet=st.characters(blacklist_characters="{}[]:", blacklist_categories=("Cs",)),
                min_size=1, max_size=10).filter(lambda s: s.strip())
_tag = st.one_of(
    st.builds(lambda n: f"[{n}]", _name),
    st.builds(lambda p, n: f"{{{p}:{n}}}", st.sampled_from("fgFG"), _name),
)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.one_of(_text, _tag), max_size=10))
def test_round_trip_property(parts):
    src = "".join(parts)
    t = parse(src)
    assert serialize(t) == src
    for s in t.tags:
        assert s.payload == s.payload.strip() and s.payload
