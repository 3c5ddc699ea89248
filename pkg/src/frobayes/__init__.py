"""Bayesian inference with dagger Frobenius string diagrams."""
from . import bayes, dcc, diagram, dsl, linalg, models, rewrite
from .errors import (DomainError, FrobayesError, KindError, ParseError, ShapeError, TypeCheckError,
                     UndecidableError, VerificationError)
from .linalg import DEFAULT_TOL, Tol

__all__ = [
    "bayes", "dcc", "diagram", "dsl", "linalg", "models", "rewrite",
    "DomainError", "FrobayesError", "KindError", "ParseError", "ShapeError", "TypeCheckError",
    "UndecidableError", "VerificationError", "DEFAULT_TOL", "Tol",
]
__version__ = "0.1.0"
