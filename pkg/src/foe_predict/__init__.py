"""Predictive process monitoring driven by first-order event expressions."""
__version__ = "0.1.0"
