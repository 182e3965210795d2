"""Parabolic Littlewood-Paley machinery on periodic grids."""

from ._backend import NAME as BACKEND
from .dilation import DilationGroup, check_norm_properties, dilate, rho, validate_matrix

__version__ = "0.1.0"

__all__ = ["BACKEND", "DilationGroup", "check_norm_properties", "dilate", "rho", "validate_matrix", "__version__"]
