"""Multimodal trust-cue transcripts: parsing, featurization, forests, TreeSHAP, timelines and statistics."""
__version__ = "0.1.0"
