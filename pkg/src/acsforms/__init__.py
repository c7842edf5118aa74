"""Closed anti-invariant 2-forms of almost complex structures."""

__version__ = "0.1.0"

from .symexpr import Expr, ParseError, SampleDomain, is_zero, parse  # noqa: E402
from .forms import KT, R4, R6, Coframe, DifferentialForm, exterior_derivative, wedge  # noqa: E402
from .acs import AlmostComplexStructure, EndomorphismField, is_integrable, nijenhuis  # noqa: E402

__all__ = [
    "__version__", "Expr", "ParseError", "SampleDomain", "is_zero", "parse",
    "KT", "R4", "R6", "Coframe", "DifferentialForm", "exterior_derivative", "wedge",
    "AlmostComplexStructure", "EndomorphismField", "is_integrable", "nijenhuis",
]
