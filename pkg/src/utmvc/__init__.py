"""Contour-integral solver and spectral toolkit for linear, dissipative,
second-order evolution problems with spatially varying coefficients."""

from .coefficients import (
    CoefficientProfile,
    DispersionCache,
    Domain,
    DomainKind,
    contour_params,
    dispersion,
    preset_profile,
    validate_assumptions,
)
from .delta import BoundaryCase, BoundaryConditions, classify
from .eigen import EigenPair, SearchRegion, eigenfunction, find_eigenvalues, initial_guesses
from .kernels import ProblemData
from .solver import ContourSpec, SolutionField, build_contour, solve_q

__all__ = [
    "CoefficientProfile", "DispersionCache", "Domain", "DomainKind",
    "contour_params", "dispersion", "preset_profile", "validate_assumptions",
    "BoundaryCase", "BoundaryConditions", "classify",
    "EigenPair", "SearchRegion", "eigenfunction", "find_eigenvalues", "initial_guesses",
    "ProblemData", "ContourSpec", "SolutionField", "build_contour", "solve_q",
]

__version__ = "0.1.0"
