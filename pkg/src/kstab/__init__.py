"""Exact arithmetic for K-stability of polarized spherical varieties."""

from .kfun import PLConcave, functional_J, functional_L, functional_L_smooth
from .spherical import SphericalDatum, SphericalFamily
from .verdict import Kind, full_criterion

__all__ = [
    "Kind",
    "PLConcave",
    "SphericalDatum",
    "SphericalFamily",
    "full_criterion",
    "functional_J",
    "functional_L",
    "functional_L_smooth",
]

__version__ = "0.1.0"
