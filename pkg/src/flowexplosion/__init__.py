"""Explosion thresholds for semilinear advection-diffusion problems."""

__version__ = "0.1.0"
