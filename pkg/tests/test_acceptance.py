"""End-to-end acceptance checks. Each test prints one PASS/FAIL line with its runtime."""
import contextlib
import time
from collections import Counter

import numpy as np
import pytest

from conftest import TABLE1, TABLE1_COUNTS
from trustcues.analyze import cooccurrence, cross_apply, phi_matrix
from trustcues.cli import main
from trustcues.explain import TreeExplainer, brute_force_shapley, summarize
from trustcues.featurize import featurize
from trustcues.forest import RandomForest, evaluate_protocol, fit_forest, stratified_split
from trustcues.lexicon import load_lexicon
from trustcues.stats import TABLE_ROWS, rm_anova, score_table, synthetic_ratings
from trustcues.synth import default_profile, generate_dataset, get_preset
from trustcues.timeline import (BehaviorTimeline, TimingConfig, compile_timeline, dumps,
                                loads)
from trustcues.transcript import parse, serialize


@contextlib.contextmanager
def criterion(capsys, number, title, limit_s=None):
    start = time.perf_counter()
    ok = False
    try:
        yield
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        within = limit_s is None or elapsed < limit_s
        status = "PASS" if ok and within else "FAIL"
        budget = f" (limit {limit_s:g} s)" if limit_s is not None else ""
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {status}: {title} [{elapsed:.2f} s{budget}]")
    assert within, f"criterion {number} took {elapsed:.2f} s, limit {limit_s} s"


SPOT = {"Defeated": "6.733", "Clap": "2.067", "Waving 2": "3.167", "Hard Head Nod": "1.633",
        "Thinking": "4.233", "Head Nod Yes": "2.600", "Yawn": "8.333", "Laughing": "9.767",
        "Salute": "2.833", "Telling a Secret (Left)": "10.933", "Offensive Idle": "10.567",
        "No": "5.000", "Joyful Jump": "1.867", "Pointing Forward": "4.700"}


def test_1_lexicon_fidelity(capsys):
    with criterion(capsys, 1, "lexicon fidelity", 1.0):
        lex = load_lexicon()
        assert (len(lex.gestures), len(lex.facial), len(lex.audio)) == (72, 12, 10)
        assert lex.n_features == 94
        for name, dur in SPOT.items():
            assert f"{lex.gesture(name).duration:.3f}" == dur, name


def _random_transcript(rng):
    alphabet = list("abc XYZ.,!?...'\u2014\u00e9\n\t")
    names = ["Clap", " happy ", "short pause", "x", "Hard Head Nod", "été"]
    parts = []
    for _ in range(rng.integers(0, 12)):
        kind = rng.integers(0, 4)
        if kind == 0:
            parts.append("".join(rng.choice(alphabet, size=rng.integers(0, 10))))
        else:
            name = names[rng.integers(len(names))]
            ws = " " * int(rng.integers(0, 3))
            parts.append({1: f"[{name}]", 2: f"{{{ws}f{ws}:{name}}}",
                          3: f"{{g:{ws}{name}}}"}[int(kind)])
    return "".join(parts)


def test_2_grammar(capsys, lex):
    with criterion(capsys, 2, "grammar round trip and example counts", 10.0):
        for key, src in TABLE1.items():
            assert serialize(parse(src)) == src
            counts = featurize(src, lex).counts
            assert {int(i): int(counts[i]) for i in np.flatnonzero(counts)} == TABLE1_COUNTS[key]
        rng = np.random.default_rng(2024)
        failures = 0
        for _ in range(10_000):
            src = _random_transcript(rng)
            failures += serialize(parse(src)) != src
        assert failures == 0


def test_3_forest_protocol(capsys, neutral_ability_X):
    with criterion(capsys, 3, "forest protocol accuracy and shuffled baseline", 60.0):
        X, y = neutral_ability_X
        assert len(y) == 2000
        rep = evaluate_protocol(X, y, target="level", seeds=20, n_estimators=100)
        assert rep.mean >= 0.99, rep.headline()
        shuffled = np.random.default_rng(7).permutation(y)
        base = evaluate_protocol(X, shuffled, target="level", seeds=20, n_estimators=100)
        assert abs(base.mean - base.majority_rate) <= 0.05, base.headline()
        h = rep.headline()
        assert h.startswith("mean accuracy of ") and "[95% CI: " in h
        with capsys.disabled():
            print(f"\n  signal: {h}\n  shuffled: {base.headline()} "
                  f"(majority {100 * base.majority_rate:.2f}%)")


def test_4_shap_correctness(capsys, neutral_ability_X, ability_profile, lex):
    with criterion(capsys, 4, "TreeSHAP exactness and signature recovery", 60.0):
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(100):
            d = int(rng.integers(3, 13))
            n = int(rng.integers(20, 60))
            Xs = rng.integers(0, 3, size=(n, d)).astype(float)
            ys = rng.integers(0, int(rng.integers(2, 4)), size=n)
            if len(set(ys)) < 2:
                ys[0], ys[1] = 0, 1
            model = RandomForest(n_estimators=int(rng.integers(1, 6)),
                                 max_depth=int(rng.integers(1, 4)),
                                 random_state=int(rng.integers(1 << 30))).fit(Xs, ys)
            exp = TreeExplainer(model, Xs)
            x = Xs[int(rng.integers(n))]
            worst = max(worst, float(np.max(np.abs(
                exp.explain(x).phi - brute_force_shapley(model, x, Xs).phi))))
        assert worst <= 1e-9, worst

        X, y = neutral_ability_X
        train, test = stratified_split(y, 0.2, 0)
        model = fit_forest(X[train], y[train], target="level", n_estimators=100)
        exp = TreeExplainer(model, X[train])
        phi = exp.shap_values(X[test])
        gap = np.abs(exp.expected_value + phi.sum(axis=2) - exp.model_output(X[test]))
        assert gap.max() <= 1e-9
        summary = summarize(phi, X[test], list(model.classes_), lex.feature_names)
        for level, sig in ability_profile.signature_indices(lex).items():
            ranked = summary.top(level, len(sig) + 2)
            top = {f.index: f.direction for f in ranked}
            for j in sig:
                assert j in top and top[j] > 0, (level, lex.feature_names[j], ranked)


def test_5_cross_application(capsys, neutral_ability, lex):
    with criterion(capsys, 5, "gender classifier applied to an ungendered corpus"):
        gendered = generate_dataset("GenderAbility")
        model = fit_forest(gendered.feature_matrix(lex), gendered.labels("gender"),
                           target="gender", n_estimators=100, feature_names=lex.feature_names)
        rep = cross_apply(model, neutral_ability, lex=lex, classifier_id="GenderAbility",
                          corpus_id="NeutralAbility")
        assert sum(rep.counts.values()) == rep.n_samples == len(neutral_ability)
        assert sum(rep.percentages.values()) == pytest.approx(100.0, abs=1e-9)
        assert set(rep.strata) == {"Low", "Medium", "High"}
        for c in rep.classes:
            assert sum(s[c] for s in rep.strata.values()) == rep.counts[c]
        assert sum(sum(s.values()) for s in rep.strata.values()) == rep.n_samples
        with capsys.disabled():
            print("\n" + rep.to_text().rstrip())


def test_6_cooccurrence(capsys, lex):
    with criterion(capsys, 6, "co-occurrence phi"):
        prof = default_profile("Ability", forced_signatures=1, gendered=False)
        corpus = generate_dataset("NeutralAbility", profile=prof)
        rep = cooccurrence(corpus, lex=lex)
        a, b, phi, _ = rep.top(1)[0]
        assert {a, b} == {"hesitant", "whisper"} and phi == 1.0
        n = 2000
        rng = np.random.default_rng(6)
        B = (rng.random((n, 30)) < rng.uniform(0.05, 0.5, 30)).astype(int)
        vals = phi_matrix(B)[0][np.triu_indices(30, k=1)]
        share = float(np.mean(np.abs(vals) <= 3 / np.sqrt(n)))
        assert share >= 0.95, share


def test_7_timeline(capsys, lex):
    with criterion(capsys, 7, "timeline conservation, queueing and export"):
        for src in TABLE1.values():
            tl = compile_timeline(src, lex)
            assert len(tl.events) + len(tl.drops) == len(parse(src).tags)
            text = dumps(tl)
            assert dumps(loads(text)) == text
            assert isinstance(BehaviorTimeline.from_dict(tl.to_dict()), BehaviorTimeline)
        tl = compile_timeline("{g: Defeated}{g: Clap}", lex, TimingConfig(policy="queue"))
        clap = [e for e in tl.events if e.name == "Clap"][0]
        assert clap.start_ms == 6733 and clap.start == 6.733


def test_8_stats(capsys):
    with criterion(capsys, 8, "repeated-measures ANOVA oracle and score table"):
        Y = np.array([[1, 3, 4], [2, 2, 5], [0, 3, 3], [1, 4, 6], [2, 3, 4], [0, 1, 3]],
                     dtype=float)
        r = rm_anova(Y, ["Low", "Medium", "High"])
        assert r.F == pytest.approx(1355 / 53, abs=1e-6)
        assert (r.df1, r.df2) == (2, 10)
        assert r.mauchly.W == pytest.approx(0.9355642577429693, abs=1e-6)
        bonf = [c.p_bonferroni for c in r.pairwise]
        assert bonf == pytest.approx([0.05960415457013822, 0.001578446038955704,
                                      0.05167364904102412], abs=1e-6)
        assert rm_anova(Y + 7).F == pytest.approx(r.F, rel=1e-12)
        table = score_table(synthetic_ratings(30, seed=8))
        assert table.rows == TABLE_ROWS and len(table.columns) == 6
        text = table.to_text()
        assert len(text.splitlines()) == 2 + len(TABLE_ROWS)
        with capsys.disabled():
            print("\n" + text.rstrip())


def _pipeline(root):
    corpus = root / "corpus.jsonl"
    steps = [
        ["gen", "--preset", "NeutralAbility", "--seed", "3", "--out", str(corpus)],
        ["train", str(corpus), "--seeds", "5", "--out", str(root / "report.json"),
         "--model-out", str(root / "model.json")],
        ["explain", str(corpus), "--format", "csv", "--out", str(root / "shap.csv")],
        ["apply", str(corpus), "--model", str(root / "model.json"), "--format", "json",
         "--out", str(root / "apply.json")],
        ["cooc", str(corpus), "--format", "csv", "--out", str(root / "cooc.csv")],
        ["timeline", str(corpus), "--out", str(root / "timeline.jsonl")],
    ]
    for argv in steps:
        assert main(argv) == 0, argv
    return {p.name: p.read_bytes() for p in sorted(root.iterdir())}


def test_9_determinism(capsys, tmp_path, monkeypatch):
    with criterion(capsys, 9, "byte-identical pipeline reruns"):
        monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        with capsys.disabled(), contextlib.redirect_stdout(None):
            first = _pipeline(tmp_path / "a")
            second = _pipeline(tmp_path / "b")
        assert sorted(first) == ["apply.json", "cooc.csv", "corpus.jsonl", "model.json",
                                 "report.json", "shap.csv", "timeline.jsonl"]
        for name in first:
            assert first[name] == second[name], name
