import json
from collections import Counter

import httpx
import numpy as np
import pytest

from trustcues.featurize import CorpusError, featurize, load_corpus, save_corpus
from trustcues.synth import (PRESETS, ChatClient, EndpointConfig, GenerationError,
                             ProfileError, PromptSpec, SynthProfile, build_prompt,
                             default_profile, generate_dataset, generate_offline,
                             generate_remote, get_preset, load_intents, turn_specs,
                             user_message)
from trustcues.transcript import parse


# -- prompt -------------------------------------------------------------

def test_ability_prompt_contents(lex):
    text = build_prompt(PromptSpec("Ability", "High"), lex)
    assert "skills, competencies, and characteristics" in text
    assert "Ability Score (High)" in text
    assert "Annexe Ability" in text and "Annexe Benevolence" not in text
    assert "male agent" not in text
    assert "- Defeated: The character raises their arms" in text
    assert "Thankful" in text and "whisper" in text
    assert "${" not in text and "\u2014" not in text


def test_benevolence_prompt_has_own_annex_only(lex):
    text = build_prompt(PromptSpec("Benevolence", "Low", "Female"), lex)
    assert "Annexe Benevolence" in text and "Annexe Ability" not in text
    assert "You inhabit a female agent." in text


def test_untraited_prompt_omits_both_annexes(lex):
    text = build_prompt(PromptSpec(), lex)
    assert "Annexe" not in text and "Score (" not in text


def test_user_message():
    assert user_message(PromptSpec("Ability", "Medium", intent="go left")) == \
        "Advise the user to go left.\nAbility Score: Medium"
    assert user_message(PromptSpec(intent="wait")) == "Advise the user to wait."


@pytest.mark.parametrize("kw", [
    {"trait": "Ability"}, {"trait": "None", "level": "High"}, {"intent": " "},
    {"temperature": 2.5}, {"max_tokens": 0}, {"max_tokens": 1.5}, {"gender": "Other"},
])
def test_prompt_spec_validation(kw):
    with pytest.raises(ValueError):
        PromptSpec(**kw)


# -- offline synthesizer -------------------------------------------------

def test_offline_determinism_and_signatures(lex, ability_profile):
    spec = PromptSpec("Ability", "High")
    a = generate_offline(spec, ability_profile, index=7, lex=lex)
    assert a == generate_offline(spec, ability_profile, index=7, lex=lex)
    assert a != generate_offline(spec, ability_profile, index=8, lex=lex)
    sig = ability_profile.signature_indices(lex)
    for level in ("Low", "Medium", "High"):
        for i in range(30):
            res = featurize(generate_offline(PromptSpec("Ability", level), ability_profile,
                                             index=i, lex=lex), lex)
            assert res.unknown == []
            assert all(res.counts[j] > 0 for j in sig[level])
            others = [j for lv, idx in sig.items() if lv != level for j in idx]
            assert all(res.counts[j] == 0 for j in others)


def test_offline_coupling(lex, ability_profile):
    hes, whi = lex.index("hesitant", "audio"), lex.index("whisper", "audio")
    for i in range(200):
        c = featurize(generate_offline(PromptSpec("Ability", "Low"), ability_profile,
                                       index=i, lex=lex), lex).counts
        assert c[hes] == c[whi]


def test_gendered_turns_carry_gender_cue(lex):
    prof = default_profile("Benevolence")
    male = {lex.index("clears throat", "audio"), lex.index("Being Cocky", "gesture")}
    for i in range(40):
        c = featurize(generate_offline(PromptSpec("Benevolence", "Medium", "Male"), prof,
                                       index=i, lex=lex), lex).counts
        assert any(c[j] for j in male)


def test_profile_validation_and_round_trip(tmp_path, lex):
    prof = default_profile("Ability", seed=3)
    prof.validate(lex)
    p = tmp_path / "p.json"
    prof.save(p)
    again = SynthProfile.load(p)
    assert again.to_dict() == prof.to_dict()
    spec = PromptSpec("Ability", "Medium", "Female")
    assert generate_offline(spec, again, index=2) == generate_offline(spec, prof, index=2)
    with pytest.raises(ProfileError):
        SynthProfile("Ability", {("High", None): {("audio", "pause"): 0.5}},
                     {"High": (("audio", "pause"),)})
    with pytest.raises(ProfileError):
        SynthProfile("Ability", {}, {"High": (("audio", "pause"),),
                                     "Low": (("audio", "pause"),)})
    bad = SynthProfile("Ability", {("High", None): {("audio", "yodel"): 1.0}},
                       {"High": (("audio", "yodel"),)})
    with pytest.raises(ProfileError):
        bad.validate(lex)
    with pytest.raises(ProfileError):
        generate_offline(PromptSpec("Benevolence", "High"), prof)
    with pytest.raises(ProfileError):
        SynthProfile.from_dict({"trait": "Ability"})


# -- presets and datasets -------------------------------------------------

def test_preset_sizes():
    assert {k: v.size for k, v in PRESETS.items()} == {
        "NeutralAbility": 2000, "NeutralBenevolence": 2000, "GenderAbility": 4000,
        "GenderBenevolence": 4000, "Control": 2000}
    with pytest.raises(ValueError):
        get_preset("Huge")


def test_neutral_stratification(neutral_ability):
    assert len(neutral_ability) == 2000
    counts = Counter(neutral_ability.labels("level"))
    assert all(abs(n - 2000 / 3) <= 1 for n in counts.values())


def test_gendered_cells_balanced():
    plan = get_preset("GenderAbility").plan()
    cells = Counter(plan)
    assert len(cells) == 6 and all(abs(n - 4000 / 6) <= 1 for n in cells.values())


def test_intents_balanced_within_cells():
    specs = turn_specs(get_preset("NeutralAbility").resized(600))
    per = Counter((s.level, s.intent) for s in specs)
    assert len(per) == 6 and set(per.values()) == {100}


def test_load_intents(tmp_path):
    p = tmp_path / "i.txt"
    p.write_text("# comment\nrun\n\nhide\n", encoding="utf-8")
    assert load_intents(p) == ("run", "hide")
    p.write_text("# only\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_intents(p)


def test_dataset_byte_identical(tmp_path):
    preset = get_preset("Control").resized(60)
    paths = []
    for k in range(2):
        paths.append(tmp_path / f"c{k}.jsonl")
        save_corpus(generate_dataset(preset), paths[-1])
    assert paths[0].read_bytes() == paths[1].read_bytes()
    c = load_corpus(paths[0])
    assert c.extra["generator"] == "offline" and c.samples[0].turn_id == "Control-00000"


def test_resume_from_partial(tmp_path):
    preset = get_preset("NeutralBenevolence").resized(30)
    full = generate_dataset(preset)
    partial = tmp_path / "part.jsonl"
    generate_dataset(preset.resized(12), partial_path=partial)
    # Simulate an interrupted write on the final line.
    with open(partial, "a", encoding="utf-8") as fh:
        fh.write('{"turn_id": "Neutr')
    resumed = generate_dataset(preset, partial_path=partial)
    assert resumed.raws() == full.raws()
    assert len(partial.read_text(encoding="utf-8").splitlines()) == 30


def test_resume_rejects_foreign_partial(tmp_path):
    partial = tmp_path / "part.jsonl"
    generate_dataset(get_preset("Control").resized(3), partial_path=partial)
    with pytest.raises(CorpusError):
        generate_dataset(get_preset("NeutralAbility").resized(5), partial_path=partial)


# -- remote client --------------------------------------------------------

def _echo_transport(calls):
    def handler(request):
        body = json.loads(request.content)
        calls.append(body)
        user = body["messages"][1]["content"]
        return httpx.Response(200, json={"choices": [{"message": {
            "content": f"{{f: confident}} {user.splitlines()[0]}"}}]})
    return httpx.MockTransport(handler)


def _client(transport, **kw):
    return ChatClient(EndpointConfig(base_url="http://mock/v1", **kw), transport=transport,
                      sleep=lambda s: None, api_key="k")


def test_remote_request_shape(lex):
    calls = []
    client = _client(_echo_transport(calls))
    out = generate_remote(PromptSpec("Ability", "High", intent="go"), client, lex)
    assert out == "{f: confident} Advise the user to go."
    body = calls[0]
    assert body["model"] == "gpt-4o" and body["temperature"] == 0.7
    assert body["max_tokens"] == 2048
    assert body["messages"][0]["role"] == "system"
    assert "Ability Score (High)" in body["messages"][0]["content"]


def test_remote_dataset(lex):
    client = _client(_echo_transport([]))
    c = generate_dataset(get_preset("NeutralAbility").resized(9), "remote",
                         client=client, workers=3)
    assert len(c) == 9 and c.provenance == "gpt-4o"
    assert parse(c.samples[0].raw).tags[0].payload == "confident"


def test_remote_retries_then_fails():
    attempts = []
    delays = []

    def handler(request):
        attempts.append(1)
        return httpx.Response(500, text="boom")
    client = ChatClient(EndpointConfig(base_url="http://mock", max_attempts=3),
                        transport=httpx.MockTransport(handler), sleep=delays.append)
    with pytest.raises(GenerationError) as info:
        client.complete("s", "u", temperature=0.7, max_tokens=10)
    assert len(attempts) == 3 and info.value.status == 500
    assert delays == [1.0, 2.0]


def test_remote_recovers_after_transient_errors():
    seq = iter([httpx.Response(429), httpx.Response(503),
                httpx.Response(200, json={"choices": [{"message": {"content": "ok"}}]})])
    client = _client(httpx.MockTransport(lambda r: next(seq)))
    assert client.complete("s", "u", temperature=0, max_tokens=5) == "ok"


@pytest.mark.parametrize("response", [
    httpx.Response(401, text="bad key"),
    httpx.Response(200, json={"choices": []}),
    httpx.Response(200, json={"choices": [{"message": {"content": "  "}}]}),
])
def test_remote_non_retryable(response):
    n = []

    def handler(request):
        n.append(1)
        return response
    with pytest.raises(GenerationError):
        _client(httpx.MockTransport(handler)).complete("s", "u", temperature=0, max_tokens=5)
    assert len(n) == 1


def test_remote_dataset_aggregates_failures():
    client = _client(httpx.MockTransport(lambda r: httpx.Response(400, text="no")))
    with pytest.raises(GenerationError, match="3 turn"):
        generate_dataset(get_preset("Control").resized(3), "remote", client=client)
    with pytest.raises(ValueError):
        generate_dataset("Control", "remote")
