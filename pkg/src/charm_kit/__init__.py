"""Fuchsian groups of semicircle reflections, their Green and Martin functions, and comb maps."""

__version__ = "0.1.0"
