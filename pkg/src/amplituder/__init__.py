"""Amplitude-equation reduction and spectral verification for weakly nonlinear parabolic PDEs.

Submodules
----------
symbols
    Matrix-valued Fourier symbols and polynomial nonlinearities.
dispersion
    Critical set, degeneracy order and the effective diffusion operator.
nonlinear
    Fourier coefficients of the nonlinearity and the reduced reaction terms.
solver
    Exponential pseudo-spectral integrator for the full and amplitude systems.
harness
    Convergence, decay and stability experiments.
problem, cli
    Problem files and the ``amplituder`` command.
"""
from .dispersion import analyze
from .harness import Model, prepare
from .nonlinear import derive
from .problem import parse_problem
from .symbols import MatrixPolynomial, PolynomialNonlinearity

__version__ = "0.1.0"

__all__ = [
    "MatrixPolynomial",
    "Model",
    "PolynomialNonlinearity",
    "analyze",
    "derive",
    "parse_problem",
    "prepare",
]
