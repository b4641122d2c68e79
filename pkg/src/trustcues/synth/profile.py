"""Deterministic offline turn synthesizer.

Each class (level, gender) owns a categorical distribution over lexicon
tags. Every turn contains its level's signature tags (all of them by
default), and gendered turns also carry one of the gender's signature tags,
so the class is always recoverable from the counts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..featurize import GENDERS, LEVELS, Trait
from ..lexicon import BehaviorLexicon, default_lexicon
from ..transcript import SegmentKind, render_tag
from .prompt import DEFAULT_INTENTS, PromptSpec

PROB_TOL = 1e-9
_KIND = {"gesture": SegmentKind.GESTURE, "facial": SegmentKind.FACIAL,
         "audio": SegmentKind.AUDIO}


class ProfileError(ValueError):
    pass


def _tag(channel: str, name: str) -> tuple[str, str]:
    if channel not in _KIND:
        raise ProfileError(f"unknown channel {channel!r}")
    return (channel, name)


def _key_str(key: tuple) -> str:
    return "|".join("-" if k is None else k for k in key)


def _key_parse(text: str) -> tuple:
    level, gender = text.split("|")
    return (None if level == "-" else level, None if gender == "-" else gender)


@dataclass
class SynthProfile:
    """Generating distributions for one trait.

    Parameters
    ----------
    trait : Trait
    distributions : dict
        ``(level, gender) -> {(channel, name): probability}``. Level is None
        for the untraited profile, gender None for ungendered classes.
    signatures : dict
        ``level -> tuple of (channel, name)``. Disjoint across levels.
    gender_signatures : dict
        ``gender -> tuple of (channel, name)``.
    length_probs : dict
        ``number of sampled tags -> probability``.
    couplings : tuple
        ``(lead, follower)`` pairs: the follower is emitted right after its
        lead and never otherwise, so the pair always co-occurs.
    forced_signatures : int or None
        Distinct level-signature tags placed in every turn before sampling;
        None places the whole signature.
    seed : int
    """

    trait: Trait
    distributions: dict
    signatures: dict
    gender_signatures: dict = field(default_factory=dict)
    length_probs: dict = field(default_factory=lambda: {3: 0.25, 4: 0.25, 5: 0.25, 6: 0.25})
    couplings: tuple = ()
    forced_signatures: int | None = None
    seed: int = 0

    def __post_init__(self):
        self.trait = Trait(self.trait)
        for key, dist in self.distributions.items():
            total = sum(dist.values())
            if abs(total - 1.0) > PROB_TOL or any(p < 0 for p in dist.values()):
                raise ProfileError(f"distribution for {key} sums to {total}, not 1")
        if self.forced_signatures is not None and self.forced_signatures < 1:
            raise ProfileError("forced_signatures must be at least 1")
        total = sum(self.length_probs.values())
        if abs(total - 1.0) > PROB_TOL or min(self.length_probs) < 1:
            raise ProfileError("length distribution must sum to 1 over positive lengths")
        owner = {}
        for level, sig in self.signatures.items():
            if not sig:
                raise ProfileError(f"empty signature for level {level}")
            for tag in sig:
                if tag in owner and owner[tag] != level:
                    raise ProfileError(
                        f"signature tag {tag} shared by levels {owner[tag]} and {level}")
                owner[tag] = level
        followers = {f for _, f in self.couplings}
        for key, dist in self.distributions.items():
            if key[0] not in self.signatures:
                raise ProfileError(f"class {key} has no level signature")
            if key[1] is not None and key[1] not in self.gender_signatures:
                raise ProfileError(f"class {key} has no gender signature")
            if any(dist.get(f, 0.0) > 0 for f in followers):
                raise ProfileError("coupled follower tags may not be sampled directly")

    def validate(self, lex: BehaviorLexicon | None = None) -> None:
        """Raise if any tag is unknown to ``lex``."""
        lex = lex or default_lexicon()
        tags = set()
        for dist in self.distributions.values():
            tags.update(dist)
        for group in (self.signatures, self.gender_signatures):
            for sig in group.values():
                tags.update(sig)
        for pair in self.couplings:
            tags.update(pair)
        for channel, name in sorted(tags):
            if lex.resolve(name, channel) is None:
                raise ProfileError(f"{channel} tag {name!r} is not in the lexicon")

    def signature_indices(self, lex: BehaviorLexicon | None = None) -> dict:
        lex = lex or default_lexicon()
        return {level: sorted(lex.index(n, c) for c, n in sig)
                for level, sig in self.signatures.items()}

    def covers(self, key: tuple) -> bool:
        return key in self.distributions

    def to_dict(self) -> dict:
        def tags(seq):
            return [list(t) for t in seq]
        return {
            "trait": self.trait.value,
            "seed": self.seed,
            "forced_signatures": self.forced_signatures,
            "length_probs": {str(k): v for k, v in sorted(self.length_probs.items())},
            "signatures": {_key_str((k, None)): tags(v) for k, v in self.signatures.items()},
            "gender_signatures": {k: tags(v) for k, v in self.gender_signatures.items()},
            "couplings": [[list(a), list(b)] for a, b in self.couplings],
            "distributions": {
                _key_str(k): [[c, n, p] for (c, n), p in sorted(d.items())]
                for k, d in self.distributions.items()
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthProfile":
        try:
            return cls(
                trait=doc["trait"],
                seed=int(doc.get("seed", 0)),
                forced_signatures=doc.get("forced_signatures"),
                length_probs={int(k): float(v) for k, v in doc["length_probs"].items()},
                signatures={_key_parse(k)[0]: tuple(_tag(*t) for t in v)
                            for k, v in doc["signatures"].items()},
                gender_signatures={k: tuple(_tag(*t) for t in v)
                                   for k, v in doc.get("gender_signatures", {}).items()},
                couplings=tuple((_tag(*a), _tag(*b)) for a, b in doc.get("couplings", [])),
                distributions={_key_parse(k): {_tag(c, n): float(p) for c, n, p in v}
                               for k, v in doc["distributions"].items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ProfileError):
                raise
            raise ProfileError(f"malformed profile document: {exc}") from None

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n",
                              encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SynthProfile":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _normalized(weights: dict) -> dict:
    total = float(sum(weights.values()))
    return {k: v / total for k, v in weights.items()}


_BACKGROUND = (("gesture", "Arm Gesture (Left)"), ("gesture", "Arm Gesture (Right)"),
               ("gesture", "Pointing Forward"), ("audio", "thoughtful"),
               ("facial", "neutral"), ("audio", "hesitant"))
_SIGNATURES = {
    Trait.ABILITY: {
        "High": (("facial", "confident"), ("gesture", "Hard Head Nod")),
        "Medium": (("gesture", "Thinking"), ("gesture", "Talking 3")),
        "Low": (("audio", "pause"), ("audio", "deep inhale")),
    },
    Trait.BENEVOLENCE: {
        "High": (("gesture", "Thankful"), ("facial", "happy")),
        "Medium": (("gesture", "Acknowledging"), ("gesture", "Head Nod Yes")),
        "Low": (("facial", "bored"), ("gesture", "Dismissing Gesture")),
    },
}
_GENDER_SIGNATURES = {
    "Male": (("audio", "clears throat"), ("gesture", "Being Cocky")),
    "Female": (("audio", "excited intonation"), ("gesture", "Waving")),
}
_COUPLINGS = ((("audio", "hesitant"), ("audio", "whisper")),)


def default_profile(trait=Trait.ABILITY, *, seed: int = 0, gendered: bool = True,
                    signature_weight: float = 0.6, gender_weight: float = 0.2,
                    forced_signatures: int | None = None) -> SynthProfile:
    """Built-in profile with disjoint per-level signatures.

    The untraited profile draws from the High signatures of both traits,
    reflecting a generator that leans toward high trust cues when given no
    level.
    """
    trait = Trait(trait)
    if trait is Trait.NONE:
        sig = _SIGNATURES[Trait.ABILITY]["High"] + _SIGNATURES[Trait.BENEVOLENCE]["High"]
        signatures = {None: sig}
        levels = (None,)
    else:
        signatures = dict(_SIGNATURES[trait])
        levels = LEVELS
    background = tuple(t for t in _BACKGROUND if all(t not in s for s in signatures.values()))
    genders = (None,) + (GENDERS if gendered else ())
    distributions = {}
    for level in levels:
        for gender in genders:
            weights = {}
            g_share = gender_weight if gender is not None else 0.0
            bg_share = 1.0 - signature_weight - g_share
            for t in signatures[level]:
                weights[t] = weights.get(t, 0.0) + signature_weight / len(signatures[level])
            if gender is not None:
                for t in _GENDER_SIGNATURES[gender]:
                    weights[t] = weights.get(t, 0.0) + g_share / len(_GENDER_SIGNATURES[gender])
            for t in background:
                weights[t] = weights.get(t, 0.0) + bg_share / len(background)
            distributions[(level, gender)] = _normalized(weights)
    return SynthProfile(
        trait=trait,
        distributions=distributions,
        signatures=signatures,
        gender_signatures=dict(_GENDER_SIGNATURES) if gendered else {},
        couplings=_COUPLINGS,
        forced_signatures=forced_signatures,
        seed=seed,
    )


_PHRASES = {
    DEFAULT_INTENTS[0]: (
        ("Follow the exit sign straight ahead.", "The marked path is the way out.",
         "Head toward the sign you can see."),
        ("It will get you out quickly.", "Keep your eyes on the ground as you go.",
         "Stay on the path and keep moving."),
    ),
    DEFAULT_INTENTS[1]: (
        ("Take the detour to your left instead.", "Skip the sign and use the side path.",
         "Go around by the longer trail."),
        ("It is the safe way out.", "There are traps near that exit.",
         "The detour avoids every hazard."),
    ),
}
_OPENERS = ("Listen.", "Okay.", "Right.", "Alright, here is the plan.", "Hey there.")
_CLOSERS = ("You can do this.", "Go now.", "Trust me on this one.", "Let's move.", "")


def _turn_text(rng: np.random.Generator, intent: str) -> list[str]:
    if intent in _PHRASES:
        first, second = _PHRASES[intent]
        body = [first[rng.integers(len(first))], second[rng.integers(len(second))]]
    else:
        body = [f"You should {intent}."]
    sentences = [_OPENERS[rng.integers(len(_OPENERS))]] + body
    closer = _CLOSERS[rng.integers(len(_CLOSERS))]
    if closer:
        sentences.append(closer)
    words = " ".join(sentences).split(" ")
    # Occasional emphasis: one word in capitals or a trailing ellipsis.
    roll = rng.random()
    if roll < 0.25:
        j = int(rng.integers(len(words)))
        words[j] = words[j].upper()
    elif roll < 0.45:
        j = int(rng.integers(len(words)))
        words[j] = words[j].rstrip(".!?,") + "..."
    return words


def _sample_tags(rng, profile: SynthProfile, key: tuple) -> list[tuple[str, str]]:
    dist = profile.distributions[key]
    tags = sorted(dist)
    probs = np.array([dist[t] for t in tags])
    probs = probs / probs.sum()
    lengths = sorted(profile.length_probs)
    lp = np.array([profile.length_probs[n] for n in lengths])
    n = lengths[int(rng.choice(len(lengths), p=lp / lp.sum()))]
    sig = profile.signatures[key[0]]
    k = len(sig) if profile.forced_signatures is None else min(profile.forced_signatures, len(sig))
    chosen = [sig[j] for j in sorted(rng.choice(len(sig), size=k, replace=False))]
    if key[1] is not None and n > 1:
        gsig = profile.gender_signatures[key[1]]
        chosen.append(gsig[int(rng.integers(len(gsig)))])
    while len(chosen) < n:
        chosen.append(tags[int(rng.choice(len(tags), p=probs))])
    order = rng.permutation(len(chosen))
    chosen = [chosen[i] for i in order]
    for lead, follower in profile.couplings:
        out = []
        for t in chosen:
            out.append(t)
            if t == lead:
                out.append(follower)
        chosen = out
    return chosen


def generate_offline(spec: PromptSpec, profile: SynthProfile, *, index: int = 0,
                     lex: BehaviorLexicon | None = None) -> str:
    """One synthetic turn for ``spec``.

    Output depends only on ``(profile.seed, index, spec)``, so turns can be
    generated in any order or resumed.
    """
    if Trait(spec.trait) is not profile.trait:
        raise ProfileError(f"profile is for {profile.trait.value}, spec asks for "
                           f"{spec.trait.value}")
    key = spec.class_key
    if not profile.covers(key):
        raise ProfileError(f"profile has no class {key}")
    lex = lex or default_lexicon()
    rng = np.random.default_rng([profile.seed, index])
    tags = _sample_tags(rng, profile, key)
    words = _turn_text(rng, spec.intent)
    # Insertion slots between words; audio tags keep their lead/follower adjacency.
    slots = np.sort(rng.integers(0, len(words) + 1, size=len(tags)))
    pieces = []
    w = 0
    for tag, slot in zip(tags, slots):
        while w < slot:
            pieces.append(words[w])
            w += 1
        channel, name = tag
        canonical = lex.entry(lex.index(name, channel)).name
        pieces.append(render_tag(_KIND[channel], canonical))
    pieces.extend(words[w:])
    return " ".join(pieces)
