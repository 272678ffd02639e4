"""Finite-field workbench for vector MDS storage codes and their repair."""

__version__ = "0.1.0"
