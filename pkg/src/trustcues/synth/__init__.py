"""Corpus generation: prompt assembly, remote client and offline synthesizer."""
from .dataset import PRESETS, DatasetPreset, generate_dataset, get_preset, load_intents, turn_specs
from .profile import ProfileError, SynthProfile, default_profile, generate_offline
from .prompt import (DEFAULT_INTENTS, PromptSpec, build_prompt, render_tag_lists,
                     user_message)
from .remote import ChatClient, EndpointConfig, GenerationError, generate_remote

__all__ = [
    "DEFAULT_INTENTS", "PRESETS", "ChatClient", "DatasetPreset", "EndpointConfig",
    "GenerationError", "ProfileError", "PromptSpec", "SynthProfile", "build_prompt",
    "default_profile", "generate_dataset", "generate_offline", "generate_remote",
    "get_preset", "load_intents", "render_tag_lists", "turn_specs", "user_message",
]
