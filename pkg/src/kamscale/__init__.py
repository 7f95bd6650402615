"""Critical functions of the standard map, Bryuno-function scaling and
Lindstedt-series radii of convergence, in multiple precision."""

from .errors import KamError
from .numerics import PrecisionContext
from .rotation import ContinuedFraction, bryuno, convergents, parse_bracket

__all__ = ["KamError", "PrecisionContext", "ContinuedFraction", "bryuno", "convergents", "parse_bracket"]
__version__ = "0.1.0"
