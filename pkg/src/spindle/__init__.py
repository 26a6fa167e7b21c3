"""Illumination of ball polyhedra: certified verification, covering-code
directions, the randomized exponential bound, and constant-width identities on S^3."""

__version__ = "0.1.0"
