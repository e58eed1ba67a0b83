"""Numerical checks of sharp second-order Caffarelli-Kohn-Nirenberg type inequalities.

Region classification, closed-form constants, radial and Monte Carlo
evaluation of the functionals, spherical-harmonic mode analysis and
derivative-free sharpness searches.
"""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
