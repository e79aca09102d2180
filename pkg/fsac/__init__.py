"""Functional spatial autoregressive combined (SAC) model: ML estimation with an FPLS basis."""

__version__ = "1.0.0"
