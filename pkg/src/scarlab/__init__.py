"""Exact scar towers, Temperley-Lieb annihilators and chaos diagnostics for XXC-family chains."""

__version__ = "0.1.0"
