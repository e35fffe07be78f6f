"""Numerical kernels: eigensolvers, linear ODE integration, superoperators."""
from . import backend
from .integrate import DEFAULT_CONTRACT, FourierGenerator, IntegratorContract, integrate_linear
from .linalg import (ComplexSpectrum, biorthonormality_error, eig_general, eig_pair,
                     reconstruction_error)
from .superop import lindblad_rhs, unvec, vec, vec_identity, vectorize_superoperator

__all__ = [
    "backend",
    "DEFAULT_CONTRACT",
    "FourierGenerator",
    "IntegratorContract",
    "integrate_linear",
    "ComplexSpectrum",
    "biorthonormality_error",
    "eig_general",
    "eig_pair",
    "reconstruction_error",
    "lindblad_rhs",
    "unvec",
    "vec",
    "vec_identity",
    "vectorize_superoperator",
]
