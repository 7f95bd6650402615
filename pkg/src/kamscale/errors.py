"""Exception hierarchy. Every error carries a stable code and a context dict
so the CLI can serialise it as {code, message, context}."""

from __future__ import annotations

from typing import Any


class KamError(Exception):
    code = "kam_error"

    def __init__(self, message: str = "", **context: Any):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.context = context

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message,
                "context": {k: _plain(v) for k, v in self.context.items()}}


def _plain(v):
    if isinstance(v, (str, int, bool)) or v is None:
        return v
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    return str(v)


def _make(name: str, code: str, doc: str):
    cls = type(name, (KamError,), {"code": code, "__doc__": doc})
    return cls


SingularSystem = _make("SingularSystem", "singular_system", "Pivot underflow in a linear solve.")
NoConvergence = _make("NoConvergence", "no_convergence", "Iteration limit reached.")
DegenerateAbscissae = _make("DegenerateAbscissae", "degenerate_abscissae", "All x values coincide.")
ExhaustedExpansion = _make("ExhaustedExpansion", "exhausted_expansion",
                           "Rational continued fraction has fewer convergents than requested.")
RationalRotation = _make("RationalRotation", "rational_rotation", "Bryuno function is infinite at rationals.")
NewtonDivergence = _make("NewtonDivergence", "newton_divergence", "Orbit solver failed to converge.")
SingularJacobian = _make("SingularJacobian", "singular_jacobian", "Orbit Jacobian is numerically singular.")
PrecisionExhausted = _make("PrecisionExhausted", "precision_exhausted",
                           "Cancellation consumed the working precision.")
BudgetExhausted = _make("BudgetExhausted", "budget_exhausted", "Top precision tier still insufficient.")
Inconclusive = _make("Inconclusive", "inconclusive", "Classification undecided at the convergent ceiling.")
NotSubcritical = _make("NotSubcritical", "not_subcritical", "Residues do not decay.")
SmallDivisorUnderflow = _make("SmallDivisorUnderflow", "small_divisor_underflow",
                              "Small divisor below resolvable threshold.")
DegenerateSystem = _make("DegenerateSystem", "degenerate_system", "Near-singular Pade system.")
AllPolesSpurious = _make("AllPolesSpurious", "all_poles_spurious", "Every pole was filtered as a doublet.")
UnsupportedResonance = _make("UnsupportedResonance", "unsupported_resonance",
                             "No resonance constant available for this rotation number.")
DuplicateB = _make("DuplicateB", "duplicate_b", "Consecutive Bryuno values coincide.")
BudgetExceeded = _make("BudgetExceeded", "budget_exceeded", "Rows skipped at the configured budget tier.")
ParseError = _make("ParseError", "parse_error", "Malformed input.")
