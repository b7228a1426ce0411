"""Isolate colour, saturation, texture and shape cues from RGB+depth pairs."""

__version__ = "0.1.0"
