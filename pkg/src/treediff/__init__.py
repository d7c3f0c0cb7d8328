"""Differentiation and backward-shift composition on function spaces of infinite rooted trees."""

__version__ = "0.1.0"
