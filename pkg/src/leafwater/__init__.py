"""Leaf water content estimation from hyperspectral reflectance."""

__version__ = "0.1.0"
