"""Maass forms on the modular surface: joint moments, archimedean weights, trace formula and moment-bound machinery."""

__version__ = "0.1.0"
