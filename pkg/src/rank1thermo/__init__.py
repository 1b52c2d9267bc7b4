"""Lyapunov exponents, pressure functions, and multifractal spectra for
geodesic flows on nonpositively curved surfaces and their symbolic models."""

from ._kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
