"""Corpus presets, stratification and resumable assembly."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..featurize import (GENDERS, LEVELS, Corpus, CorpusError, LabeledSample, Trait,
                         creation_timestamp, iter_corpus_lines)
from ..lexicon import BehaviorLexicon, default_lexicon
from .profile import SynthProfile, default_profile, generate_offline
from .prompt import DEFAULT_INTENTS, PromptSpec
from .remote import ChatClient, GenerationError, generate_remote


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    trait: Trait
    size: int
    gendered: bool

    def cells(self) -> list[tuple]:
        levels = LEVELS if self.trait is not Trait.NONE else (None,)
        genders = GENDERS if self.gendered else (None,)
        return [(lv, g) for lv in levels for g in genders]

    def plan(self) -> list[tuple]:
        """``(level, gender)`` for each turn index, cycling through the cells.

        Cell sizes differ by at most one.
        """
        cells = self.cells()
        return [cells[i % len(cells)] for i in range(self.size)]

    def resized(self, size: int) -> "DatasetPreset":
        if size <= 0:
            raise ValueError("size must be positive")
        return DatasetPreset(self.name, self.trait, size, self.gendered)


PRESETS = {p.name: p for p in (
    DatasetPreset("NeutralAbility", Trait.ABILITY, 2000, False),
    DatasetPreset("NeutralBenevolence", Trait.BENEVOLENCE, 2000, False),
    DatasetPreset("GenderAbility", Trait.ABILITY, 4000, True),
    DatasetPreset("GenderBenevolence", Trait.BENEVOLENCE, 4000, True),
    DatasetPreset("Control", Trait.NONE, 2000, False),
)}


def get_preset(name: str) -> DatasetPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def load_intents(path) -> tuple[str, ...]:
    """One intent per non-blank line; ``#`` starts a comment line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    intents = tuple(s.strip() for s in lines if s.strip() and not s.lstrip().startswith("#"))
    if not intents:
        raise ValueError(f"{path}: no intents")
    return intents


def turn_specs(preset: DatasetPreset, intents=DEFAULT_INTENTS, **spec_kw) -> list[PromptSpec]:
    # Intents advance once per full cycle of cells so they are balanced within cells.
    n_cells = len(preset.cells())
    return [PromptSpec(trait=preset.trait, level=lv, gender=g,
                       intent=intents[(i // n_cells) % len(intents)], **spec_kw)
            for i, (lv, g) in enumerate(preset.plan())]


def _turn_id(preset: DatasetPreset, i: int) -> str:
    return f"{preset.name}-{i:05d}"


def _resume(partial: Path, preset: DatasetPreset, specs) -> list[str]:
    """Raw turns already present in ``partial``, in index order."""
    if not partial.exists():
        return []
    done = []
    for lineno, head, sample in iter_corpus_lines(partial, tolerate_truncation=True):
        if head is not None:
            continue
        i = len(done)
        spec = specs[i] if i < len(specs) else None
        if spec is None or sample.turn_id != _turn_id(preset, i) or \
                sample.trait is not spec.trait or sample.level != spec.level or \
                sample.gender != spec.gender:
            raise CorpusError("partial file does not match this preset's plan", lineno, partial)
        done.append(sample.raw)
    return done


def _record(preset, i, spec, raw) -> str:
    return json.dumps(LabeledSample(_turn_id(preset, i), raw, spec.trait, spec.level,
                                    spec.gender).to_record(),
                      ensure_ascii=False, sort_keys=True)


def generate_dataset(preset: DatasetPreset | str, generator: str = "offline", *,
                     profile: SynthProfile | None = None, seed: int = 0,
                     client: ChatClient | None = None, intents=DEFAULT_INTENTS,
                     partial_path=None, workers: int = 4,
                     lex: BehaviorLexicon | None = None,
                     deterministic: bool = True) -> Corpus:
    """Build a labeled corpus for ``preset``.

    Parameters
    ----------
    generator : {"offline", "remote"}
    profile : SynthProfile, optional
        Offline profile; defaults to the built-in one for the preset's trait.
    client : ChatClient
        Required for remote generation.
    partial_path : path, optional
        JSONL progress file. Turns already present are reused and new ones
        are appended in index order, so an interrupted run can resume.
    workers : int
        Concurrent remote requests.
    """
    if isinstance(preset, str):
        preset = get_preset(preset)
    lex = lex or default_lexicon()
    specs = turn_specs(preset, intents)
    if generator == "offline":
        profile = profile or default_profile(preset.trait, seed=seed, gendered=preset.gendered)
        profile.validate(lex)
        provenance = "offline-synth"

        def make(i):
            return generate_offline(specs[i], profile, index=i, lex=lex)
    elif generator == "remote":
        if client is None:
            raise ValueError("remote generation needs a client")
        provenance = client.config.model

        def make(i):
            return generate_remote(specs[i], client, lex)
    else:
        raise ValueError(f"unknown generator {generator!r}")

    partial = Path(partial_path) if partial_path is not None else None
    raws = _resume(partial, preset, specs) if partial is not None else []
    if partial is not None and raws:
        # Drop a possibly truncated last line before appending.
        with open(partial, "w", encoding="utf-8", newline="\n") as fh:
            for i, raw in enumerate(raws):
                fh.write(_record(preset, i, specs[i], raw) + "\n")
    todo = list(range(len(raws), preset.size))
    errors = []
    sink = open(partial, "a", encoding="utf-8", newline="\n") if partial is not None else None
    try:
        results = {}
        nxt = len(raws)

        def flush():
            nonlocal nxt
            while nxt in results and not isinstance(results[nxt], Exception):
                raw = results.pop(nxt)
                raws.append(raw)
                if sink is not None:
                    sink.write(_record(preset, nxt, specs[nxt], raw) + "\n")
                    sink.flush()
                nxt += 1

        def guarded(i):
            try:
                return i, make(i)
            except (GenerationError, ValueError) as exc:
                return i, exc

        if generator == "remote" and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = pool.map(guarded, todo)
                for i, out in outcomes:
                    results[i] = out
                    flush()
        else:
            for i in todo:
                results[i] = guarded(i)[1]
                flush()
        errors = sorted((i, r) for i, r in results.items() if isinstance(r, Exception))
    finally:
        if sink is not None:
            sink.close()
    if errors:
        detail = "; ".join(f"turn {i}: {e}" for i, e in errors[:10])
        more = f" (and {len(errors) - 10} more)" if len(errors) > 10 else ""
        raise GenerationError(f"{len(errors)} turn(s) failed: {detail}{more}")
    samples = [LabeledSample(_turn_id(preset, i), raw, specs[i].trait, specs[i].level,
                             specs[i].gender) for i, raw in enumerate(raws)]
    extra = {"intents": list(intents), "seed": seed, "generator": generator}
    if generator == "offline":
        extra["profile"] = profile.to_dict()
    return Corpus(samples, trait=preset.trait, gender_conditioned=preset.gendered,
                  provenance=provenance, created=creation_timestamp(deterministic),
                  name=preset.name, extra=extra)
