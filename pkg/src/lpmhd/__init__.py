"""Littlewood-Paley diagnostics for stationary incompressible MHD on a periodic box."""

from .grid import Grid, SpectralField, SpectralVectorField, make_grid, transform
from .littlewood_paley import LPProfile, build_lp_profile, dyadic_block, high_pass, low_pass

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "LPProfile",
    "SpectralField",
    "SpectralVectorField",
    "build_lp_profile",
    "dyadic_block",
    "high_pass",
    "low_pass",
    "make_grid",
    "transform",
]
