"""Spectral density and sine-law asymptotics for Jacobi matrices with slowly oscillating coefficients."""

from .errors import (ConfigError, DegenerateRefinement, FitDegenerate, JacobiError,
                     NonEllipticError, QuadratureError, ZeroEntryError)
from .jacobi_core import (CoefficientModel, EigenvectorState, ScaledSequence,
                          eval_polynomials, eval_solution, n_step, propagate, transfer)
from .families import FamilySpec, limit_matrix, make_family

__version__ = "0.1.0"
