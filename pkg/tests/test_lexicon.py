import json

import pytest

from trustcues.lexicon import (AUDIO_NAMES, FACIAL_NAMES, N_FEATURES, LexiconError,
                               default_lexicon, load_lexicon)

# (name, duration as printed, description), frozen from the gesture table.
SPOT_ROWS = [
    ("Defeated", "6.733",
     "The character raises their arms and left foot, then slams them against the ground."),
    ("Clap", "2.067", "The character claps their hands."),
    ("Waving 2", "3.167", "The character waves with both arms."),
    ("Offensive Idle", "10.567", "The character shakes their legs and arms."),
    ("Telling a Secret (Left)", "10.933",
     "The character leans toward the left and puts their hand in front of their mouth."),
    ("Salute", "2.833", "The character salutes militarily."),
    ("No", "5.000", 'The character leans forward heavily and signals "no" with their finger.'),
    ("Hard Head Nod", "1.633", "The character makes a big head nod, emphasized with their hands."),
    ("Thinking", "4.233", "The character thinks with one hand on the hip and one on the chin."),
    ("Yawn", "8.333", "The character yawns with a hand in front of the mouth and one stretching."),
    ("Head Nod Yes", "2.600", "The character performs small head nods."),
    ("Laughing", "9.767", "The character laughs with arm motion."),
]


def test_cardinalities(lex):
    assert len(lex.gestures) == 72
    assert len(lex.facial) == 12
    assert len(lex.audio) == 10
    assert lex.n_features == N_FEATURES == 94
    assert len(lex.feature_names) == len(set(lex.feature_names)) == 94


@pytest.mark.parametrize("name,duration,description", SPOT_ROWS)
def test_spot_rows(lex, name, duration, description):
    g = lex.gesture(name)
    assert g.name == name
    assert f"{g.duration:.3f}" == duration
    assert g.description == description


def test_total_gesture_duration(lex):
    # Sum of the 72 table durations, computed independently with awk.
    assert sum(g.duration_ms for g in lex.gestures) == 363332


def test_vocabulary_order(lex):
    assert lex.gestures[0].name == "Defeated"
    assert lex.gestures[-1].name == "Waving 2"
    assert lex.feature_names[72:84] == sorted(FACIAL_NAMES)
    assert lex.feature_names[84:] == sorted(AUDIO_NAMES)
    assert lex.index("Arm Gesture (Left)", "gesture") == 56
    assert lex.index("angry", "facial") == 72
    assert lex.index("whisper", "audio") == 93
    assert [e.channel for e in lex.vocabulary] == ["gesture"] * 72 + ["facial"] * 12 + ["audio"] * 10


@pytest.mark.parametrize("raw,channel,canonical", [
    ("confidence", "facial", "confident"),
    ("  CONFIDENT ", "facial", "confident"),
    ("short pause", "audio", "pause"),
    ("whispering", "audio", "whisper"),
    ("clear throat", "audio", "clears throat"),
    ("hard   head nod", "gesture", "Hard Head Nod"),
])
def test_aliases_and_normalization(lex, raw, channel, canonical):
    idx = lex.resolve(raw, channel)
    assert idx is not None and lex.entry(idx).name == canonical


def test_channels_are_separate(lex):
    assert lex.resolve("confused", "facial") == 75
    assert lex.entry(lex.resolve("confused", "audio")).name == "confused intonation"
    assert lex.resolve("Clap", "facial") is None
    with pytest.raises(ValueError):
        lex.resolve("Clap", "body")
    with pytest.raises(KeyError):
        lex.index("Moonwalk", "gesture")


def test_round_trip_through_file(tmp_path, lex):
    path = tmp_path / "lex.json"
    lex.dump(path)
    again = load_lexicon(path)
    assert again.feature_names == lex.feature_names
    assert [g.duration for g in again.gestures] == [g.duration for g in lex.gestures]


def _doc(lex):
    return json.loads(json.dumps(lex.to_dict()))


def test_rejects_duplicates(lex):
    doc = _doc(lex)
    doc["gestures"][1]["name"] = "defeated"
    with pytest.raises(LexiconError, match="duplicate"):
        load_lexicon(doc)


def test_rejects_bad_duration(lex):
    doc = _doc(lex)
    doc["gestures"][3]["duration"] = 0
    with pytest.raises(LexiconError):
        load_lexicon(doc)


def test_cardinality_toggle(lex):
    doc = _doc(lex)
    doc["gestures"] = doc["gestures"][:5]
    with pytest.raises(LexiconError):
        load_lexicon(doc)
    small = load_lexicon(doc, standard_size=False)
    assert small.n_features == 5 + 12 + 10


def test_default_is_cached():
    assert default_lexicon() is default_lexicon()
