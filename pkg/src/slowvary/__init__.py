"""slowvary: exact slow-manifold models of PDEs on long thin domains.

Symbolic-numeric engine that derives effective macroscale PDE
coefficients, slow-manifold parametrizations and quantitative
coupling-error terms in exact rational arithmetic, then verifies
emergence rates and error scaling numerically against the full systems.
"""

__version__ = "0.1.0"

from .exact import ExactScalar, rat
from .algebra import AlgebraError, DependencyTable, GradedPoly, HistoryAtom, HistoryExpr, Ring
from .grammar import ParseError, parse_expr, print_expr

__all__ = [
    "AlgebraError",
    "DependencyTable",
    "ExactScalar",
    "GradedPoly",
    "HistoryAtom",
    "HistoryExpr",
    "ParseError",
    "Ring",
    "parse_expr",
    "print_expr",
    "rat",
    "__version__",
]
