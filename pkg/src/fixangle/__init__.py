"""Numerical laboratory for time-domain fixed-angle inverse scattering."""
__version__ = "0.1.0"
