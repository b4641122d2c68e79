"""System-prompt assembly for turn generation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from string import Template

from ..featurize import Gender, Level, Trait
from ..lexicon import BehaviorLexicon, default_lexicon

DEFAULT_INTENTS = ("take the indicated route", "take a safer detour")
DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_TOKENS = 2048


@lru_cache(maxsize=None)
def _data_text(name: str) -> str:
    return resources.files("trustcues").joinpath("data", name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class PromptSpec:
    """What one generated turn should express.

    ``level`` is required when ``trait`` is Ability or Benevolence and must
    be absent otherwise.
    """

    trait: Trait = Trait.NONE
    level: Level | None = None
    gender: Gender | None = None
    intent: str = DEFAULT_INTENTS[0]
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        object.__setattr__(self, "trait", Trait(self.trait))
        if self.level is not None:
            object.__setattr__(self, "level", Level(self.level))
        if self.gender is not None:
            object.__setattr__(self, "gender", Gender(self.gender))
        if (self.level is None) != (self.trait is Trait.NONE):
            raise ValueError("level must be given iff trait is Ability or Benevolence")
        if not isinstance(self.intent, str) or not self.intent.strip():
            raise ValueError("intent must be a non-empty string")
        if not 0.0 <= float(self.temperature) <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if isinstance(self.max_tokens, bool) or int(self.max_tokens) != self.max_tokens \
                or self.max_tokens <= 0:
            raise ValueError(f"max_tokens must be a positive integer, got {self.max_tokens!r}")

    @property
    def class_key(self) -> tuple:
        return (None if self.level is None else self.level.value,
                None if self.gender is None else self.gender.value)


def render_tag_lists(lex: BehaviorLexicon | None = None) -> str:
    lex = lex or default_lexicon()
    gestures = "\n".join(f"- {g.name}: {g.description}" for g in lex.gestures)
    facial = ", ".join(f.name for f in lex.facial)
    audio = ", ".join(a.name for a in lex.audio)
    return (f"Gesture tags:\n{gestures}\n\nFacial tags: {facial}\n\n"
            f"Audio tags (examples): {audio}")


def build_prompt(spec: PromptSpec, lex: BehaviorLexicon | None = None) -> str:
    """Fill the bundled template for ``spec``.

    The trait annexe is included only for its own trait; the gender clause
    is appended to the role paragraph when a gender is set.
    """
    if spec.trait is Trait.NONE:
        fields = {
            "score_sentence": "You are navigating a high-stakes safety scenario.",
            "conflict_basis": "",
            "annex": "",
            "analyze_step": "Analyze Context: Read the action present in the prompt.",
            "workflow_score": "",
        }
    else:
        name = spec.trait.value
        fields = {
            "score_sentence": (
                f"You must use the provided {name} Score ({spec.level.value}) to "
                f"determine the agent's level of perceived {name.lower()} while "
                "navigating a high-stakes safety scenario."),
            "conflict_basis": f" (based on your {name} Score)",
            "annex": "\n" + _data_text(f"annex_{name.lower()}.txt"),
            "analyze_step": f"Analyze Personality: Read the {name} scores.",
            "workflow_score": f" and {name.lower()} score",
        }
    gender_clause = "" if spec.gender is None else \
        f" You inhabit a {spec.gender.value.lower()} agent."
    return Template(_data_text("prompt_template.txt")).substitute(
        gender_clause=gender_clause, tag_lists=render_tag_lists(lex), **fields)


def user_message(spec: PromptSpec) -> str:
    """User turn sent alongside the system prompt: intent plus level line."""
    lines = [f"Advise the user to {spec.intent}."]
    if spec.trait is not Trait.NONE:
        lines.append(f"{spec.trait.value} Score: {spec.level.value}")
    return "\n".join(lines)
