"""Alignable Voss surfaces: construction, reconstruction and verification."""

__version__ = "0.1.0"
