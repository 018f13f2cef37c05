"""Numerical audits for H2-surfaces with free or capillary boundary in space forms."""

__version__ = "0.1.0"
