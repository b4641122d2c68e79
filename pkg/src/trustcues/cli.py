"""Command-line entry point.

Exit status: 0 success, 1 runtime failure, 2 usage error, 3 input error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analyze import VocabularyMismatch, check_vocabulary, cooccurrence, cross_apply
from .explain import TreeExplainer, plot_data, summarize
from .featurize import (LABEL_ORDER, LEVELS, Corpus, CorpusError, featurize, iter_corpus_lines,
                        load_corpus, save_corpus)
from .forest import RandomForest, evaluate_protocol, fit_forest, stratified_split
from .lexicon import LexiconError, default_lexicon, load_lexicon
from .stats import (ITEMS, RatingError, read_ratings, rm_anova, score_table,
                    subject_matrix)
from .synth import (PRESETS, ChatClient, EndpointConfig, GenerationError, ProfileError,
                    SynthProfile, generate_dataset, load_intents)
from .synth.prompt import DEFAULT_INTENTS
from .timeline import POLICIES, TimelineError, TimingConfig, compile_timeline, dumps
from .transcript import TranscriptError

EXIT_RUNTIME, EXIT_USAGE, EXIT_INPUT = 1, 2, 3
INPUT_ERRORS = (CorpusError, TranscriptError, RatingError, LexiconError, ProfileError,
                VocabularyMismatch, TimelineError, FileNotFoundError, IsADirectoryError,
                json.JSONDecodeError, UnicodeDecodeError)


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _write(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _lexicon(args):
    return load_lexicon(args.lexicon) if args.lexicon else default_lexicon()


def _is_corpus(path: Path) -> bool:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    # A turn may itself start with "{" (a brace tag), so require valid JSON.
    try:
        return isinstance(json.loads(first), dict)
    except json.JSONDecodeError:
        return False


def _turns(path) -> list[tuple[str, str, int]]:
    """``(turn id, raw, line)`` from a corpus or a one-turn-per-line file."""
    path = Path(path)
    if _is_corpus(path):
        return [(s.turn_id, s.raw, lineno)
                for lineno, head, s in iter_corpus_lines(path) if head is None]
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if line.strip():
                out.append((f"line-{lineno}", line, lineno))
    return out


def _matrix(corpus: Corpus, lex, path) -> np.ndarray:
    try:
        return corpus.feature_matrix(lex)
    except CorpusError as exc:
        raise CorpusError(str(exc), path=path) from None


def _labels(corpus: Corpus, target: str, path):
    try:
        return corpus.labels(target)
    except ValueError as exc:
        raise CorpusError(str(exc), path=path) from None


# -- subcommands ------------------------------------------------------------

def cmd_gen(args) -> int:
    preset = PRESETS[args.preset]
    if args.size is not None:
        preset = preset.resized(args.size)
    intents = load_intents(args.intents) if args.intents else DEFAULT_INTENTS
    lex = _lexicon(args)
    client = None
    profile = SynthProfile.load(args.profile) if args.profile else None
    if args.generator == "remote":
        if not args.endpoint or not args.model:
            raise UsageError("remote generation requires --endpoint and --model")
        client = ChatClient(EndpointConfig(base_url=args.endpoint, model=args.model,
                                           api_key_env=args.api_key_env))
    try:
        corpus = generate_dataset(preset, args.generator, profile=profile, seed=args.seed,
                                  client=client, intents=intents, partial_path=args.partial,
                                  workers=args.workers, lex=lex,
                                  deterministic=args.generator == "offline")
    finally:
        if client is not None:
            client.close()
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} turns ({preset.name}, {corpus.provenance}) to {args.out}")
    return 0


def cmd_parse(args) -> int:
    lex = _lexicon(args)
    failures = unknown_total = 0
    lines = []
    for turn_id, raw, lineno in _turns(args.input):
        try:
            fz = featurize(raw, lex)
        except TranscriptError as exc:
            failures += 1
            lines.append(f"{args.input}:{lineno}: turn {turn_id}: {exc}")
            continue
        for u in fz.unknown:
            unknown_total += 1
            lines.append(f"{args.input}:{lineno}: turn {turn_id}: unknown {u.channel} tag "
                         f"{u.name!r} at offset {u.char_offset}")
    lines.append(f"{failures} malformed turn(s), {unknown_total} unknown tag(s)")
    text = "\n".join(lines) + "\n"
    _write(text, args.out)
    if args.out is not None:
        sys.stdout.write(lines[-1] + "\n")
    if failures or (args.strict_tags and unknown_total):
        return EXIT_INPUT
    return 0


def cmd_featurize(args) -> int:
    lex = _lexicon(args)
    corpus = load_corpus(args.input)
    X = _matrix(corpus, lex, args.input)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["turn_id", "trait", "level", "gender"] + lex.feature_names)
        for s, row in zip(corpus.samples, X):
            w.writerow([s.turn_id, s.trait.value, s.label("level") or "",
                        s.label("gender") or ""] + row.tolist())
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_train(args) -> int:
    lex = _lexicon(args)
    corpus = load_corpus(args.input)
    X = _matrix(corpus, lex, args.input)
    y = _labels(corpus, args.target, args.input)
    report = evaluate_protocol(X, y, target=args.target, seeds=args.seeds,
                               base_seed=args.seed, n_estimators=args.trees)
    _write(report.to_json() if args.format == "json" else report.to_table(), args.out)
    if args.out is not None:
        print(report.headline())
    if args.model_out:
        model = fit_forest(X, y, target=args.target, n_estimators=args.trees,
                           random_state=args.seed, feature_names=lex.feature_names)
        model.save(args.model_out)
    return 0


def cmd_explain(args) -> int:
    lex = _lexicon(args)
    corpus = load_corpus(args.input)
    X = _matrix(corpus, lex, args.input)
    if args.model:
        model = RandomForest.load(args.model)
        background, explained = X, X
    else:
        y = _labels(corpus, args.target, args.input)
        train, test = stratified_split(y, 0.2, args.seed)
        model = fit_forest(X[train], y[train], target=args.target, n_estimators=args.trees,
                           random_state=args.seed, feature_names=lex.feature_names)
        background, explained = X[train], X[test]
    check_vocabulary(model, lex)
    explainer = TreeExplainer(model, background, feature_perturbation=args.perturbation)
    phi = explainer.shap_values(explained)
    summary = summarize(phi, explained, list(model.classes_), lex.feature_names)
    _write(summary.to_csv(args.top) if args.format == "csv" else summary.to_table(args.top),
           args.out)
    if args.plot_data:
        _write(plot_data(phi, explained, list(model.classes_), lex.feature_names, args.top),
               args.plot_data)
    return 0


def cmd_apply(args) -> int:
    lex = _lexicon(args)
    model = RandomForest.load(args.model)
    corpus = load_corpus(args.input)
    report = cross_apply(model, corpus, lex=lex, classifier_id=Path(args.model).stem,
                         corpus_id=corpus.name or Path(args.input).stem)
    text = {"json": report.to_json, "text": report.to_text, "csv": report.plot_data}[args.format]()
    _write(text, args.out)
    return 0


def cmd_cooc(args) -> int:
    lex = _lexicon(args)
    corpus = load_corpus(args.input)
    report = cooccurrence(corpus, args.min_count, lex)
    _write(report.to_csv(args.top) if args.format == "csv" else report.to_text(args.top),
           args.out)
    return 0


def cmd_timeline(args) -> int:
    lex = _lexicon(args)
    cfg = TimingConfig(words_per_minute=args.rate, pause_ms=args.pause_ms,
                       policy=args.overlap_policy, strict=args.strict_tags)
    if args.text is not None:
        _write(dumps(compile_timeline(args.text, lex, cfg)), args.out)
        return 0
    if args.input is None:
        raise UsageError("give a corpus/turns file or --text")
    turns = _turns(args.input)
    docs = []
    for turn_id, raw, lineno in turns:
        try:
            tl = compile_timeline(raw, lex, cfg)
        except (TranscriptError, TimelineError) as exc:
            raise InputError(f"{args.input}:{lineno}: turn {turn_id}: {exc}") from None
        docs.append({"turn_id": turn_id, "timeline": tl.to_dict()})
    text = "".join(json.dumps(d, sort_keys=True, ensure_ascii=False) + "\n" for d in docs)
    _write(text, args.out)
    return 0


def cmd_stats(args) -> int:
    records = read_ratings(args.input)
    parts = [score_table(records).to_text()]
    studies = sorted({r.study for r in records}, key=lambda s: (s not in ("Ability",
                                                                          "Benevolence"), s))
    for study in studies:
        scale = args.trait or (study.lower() if study else "ability")
        items = [it.id for it in ITEMS if it.scale == scale]
        if not items:
            raise UsageError(f"no items on scale {scale!r}")
        _, Y = subject_matrix(records, items, study=study)
        result = rm_anova(Y, LEVELS)
        parts.append(f"\n{study or 'all'} study, perceived {scale}:\n" + result.to_text())
    _write("".join(parts), args.out)
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lexicon", help="lexicon JSON (default: bundled)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--config", help="JSON file of option defaults; flags override")

    p = argparse.ArgumentParser(prog="trustcues", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    p.set_defaults(subcommands=sub.choices)

    g = sub.add_parser("gen", parents=[common], help="generate a labeled corpus")
    g.add_argument("--preset", required=True, choices=sorted(PRESETS))
    g.add_argument("--generator", choices=("offline", "remote"), default="offline")
    g.add_argument("--size", type=int, help="override the preset size")
    g.add_argument("--profile", help="offline profile JSON")
    g.add_argument("--intents", help="intent list file, one per line")
    g.add_argument("--partial", help="progress file for resumable generation")
    g.add_argument("--endpoint", help="chat-completion base URL")
    g.add_argument("--model", help="remote model name")
    g.add_argument("--api-key-env", default="OPENAI_API_KEY",
                   help="environment variable holding the API key")
    g.add_argument("--workers", type=int, default=4, help="concurrent remote requests")
    g.set_defaults(func=cmd_gen, out_required=True)

    q = sub.add_parser("parse", parents=[common], help="validate turns, report unknown tags")
    q.add_argument("input")
    q.add_argument("--strict-tags", action="store_true", help="unknown tags are errors")
    q.set_defaults(func=cmd_parse)

    f = sub.add_parser("featurize", parents=[common], help="write tag-count vectors as CSV")
    f.add_argument("input")
    f.set_defaults(func=cmd_featurize)

    t = sub.add_parser("train", parents=[common], help="run the repeated-split evaluation")
    t.add_argument("input")
    t.add_argument("--target", choices=sorted(LABEL_ORDER), default="level")
    t.add_argument("--trees", type=int, default=100)
    t.add_argument("--seeds", type=int, default=20, help="number of random splits")
    t.add_argument("--format", choices=("json", "text"), default="json")
    t.add_argument("--model-out", help="also fit on the full corpus and save the model")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("explain", parents=[common], help="rank features by Shapley value")
    e.add_argument("input")
    e.add_argument("--model", help="saved forest; otherwise one is fit on an 80%% split")
    e.add_argument("--target", choices=sorted(LABEL_ORDER), default="level")
    e.add_argument("--trees", type=int, default=100)
    e.add_argument("--top", type=int, default=10)
    e.add_argument("--perturbation", choices=("tree_path_dependent", "interventional"),
                   default="tree_path_dependent")
    e.add_argument("--format", choices=("text", "csv"), default="text")
    e.add_argument("--plot-data", help="write per-sample plot data JSON here")
    e.set_defaults(func=cmd_explain)

    a = sub.add_parser("apply", parents=[common], help="apply a saved classifier to a corpus")
    a.add_argument("input")
    a.add_argument("--model", required=True)
    a.add_argument("--format", choices=("text", "json", "csv"), default="text")
    a.set_defaults(func=cmd_apply)

    c = sub.add_parser("cooc", parents=[common], help="rank tag pairs by phi coefficient")
    c.add_argument("input")
    c.add_argument("--min-count", type=int, default=1)
    c.add_argument("--top", type=int, default=20)
    c.add_argument("--format", choices=("text", "csv"), default="text")
    c.set_defaults(func=cmd_cooc)

    m = sub.add_parser("timeline", parents=[common], help="compile behavior timelines")
    m.add_argument("input", nargs="?")
    m.add_argument("--text", help="compile this single turn instead of a file")
    m.add_argument("--rate", type=float, default=160.0, help="words per minute")
    m.add_argument("--pause-ms", type=int, default=400)
    m.add_argument("--overlap-policy", choices=POLICIES, default="queue")
    m.add_argument("--strict-tags", action="store_true", help="unknown tags are errors")
    m.set_defaults(func=cmd_timeline)

    s = sub.add_parser("stats", parents=[common], help="score table and repeated-measures ANOVA")
    s.add_argument("input", help="ratings file with a header row")
    s.add_argument("--trait", choices=("ability", "benevolence", "trust", "human"),
                   help="scale to analyse (default: each study's own trait)")
    s.set_defaults(func=cmd_stats)
    return p


def _apply_config(parser, argv):
    """Re-parse with defaults taken from ``--config`` so explicit flags win."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise InputError(f"config {args.config}: expected a JSON object")
    sub = args.subcommands[args.command]
    known = {a.dest for a in sub._actions}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - known - {"config"})
    if unknown:
        raise UsageError(f"config {args.config}: unknown option(s) {unknown} for "
                         f"{args.command}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if getattr(args, "out_required", False) and not args.out:
            raise UsageError(f"{args.command} requires --out")
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, *INPUT_ERRORS) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GenerationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
