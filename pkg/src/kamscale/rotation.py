"""Continued fractions with an eventually periodic tail, convergents, numeric
value and the Bryuno function.

Bracket notation: ``[a1,a2,...,(t1,...,tm)]`` where the parenthesised group
repeats forever. ``1^inf`` / ``1^∞`` is accepted as shorthand for ``(1)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import gmpy2
from gmpy2 import mpfr

from .errors import ExhaustedExpansion, ParseError, RationalRotation
from .numerics import PrecisionContext


@dataclass(frozen=True)
class ContinuedFraction:
    head: tuple = ()
    tail: tuple = ()

    def __post_init__(self):
        head = tuple(int(a) for a in self.head)
        tail = tuple(int(a) for a in self.tail)
        if any(a < 1 for a in head + tail):
            raise ValueError("partial quotients must be >= 1")
        if not head and not tail:
            raise ValueError("empty continued fraction")
        head, tail = _canonical(head, tail)
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "tail", tail)

    # -- constructors
    @classmethod
    def parse(cls, text: str) -> "ContinuedFraction":
        return parse_bracket(text)

    @classmethod
    def from_rational(cls, p: int, q: int) -> "ContinuedFraction":
        f = Fraction(p, q)
        if not 0 < f < 1:
            raise ValueError("rational must lie in (0,1)")
        quotients = []
        while f:
            x = 1 / f
            a = x.numerator // x.denominator
            quotients.append(a)
            f = x - a
        return cls(tuple(quotients), ())

    @property
    def is_rational(self) -> bool:
        return not self.tail

    def quotient(self, k: int) -> int:
        """a_k, 1-based."""
        if k <= len(self.head):
            return self.head[k - 1]
        if not self.tail:
            raise ExhaustedExpansion("rational expansion exhausted", k=k, length=len(self.head))
        return self.tail[(k - len(self.head) - 1) % len(self.tail)]

    def quotients(self) -> Iterator[int]:
        yield from self.head
        while self.tail:
            yield from self.tail

    def canonical(self) -> str:
        return format_bracket(self)

    def __str__(self) -> str:
        return self.canonical()


def _canonical(head: tuple, tail: tuple) -> tuple:
    if tail:
        # minimal period
        m = len(tail)
        for d in range(1, m + 1):
            if m % d == 0 and tail == tail[:d] * (m // d):
                tail = tail[:d]
                break
        # absorb a head suffix that is just the tail rotated
        while head and head[-1] == tail[-1]:
            head = head[:-1]
            tail = (tail[-1],) + tail[:-1]
    return head, tail


_TOKEN = re.compile(r"^\s*(\d+)\s*(?:\^\s*(inf|∞|\\infty|\{\\infty\}))?\s*$")


def parse_bracket(text: str) -> ContinuedFraction:
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError("bracket notation must be enclosed in [ ]", text=text)
    body = s[1:-1].strip()
    if not body:
        raise ParseError("empty bracket", text=text)
    head: list[int] = []
    tail: list[int] | None = None
    m = re.search(r"\(([^()]*)\)\s*$", body)
    if m:
        try:
            tail = [int(t) for t in m.group(1).split(",")] if m.group(1).strip() else []
        except ValueError as exc:
            raise ParseError("bad periodic group", text=text) from exc
        if not tail:
            raise ParseError("empty periodic group", text=text)
        body = body[: m.start()].rstrip()
        if body:
            if not body.endswith(","):
                raise ParseError("missing comma before periodic group", text=text)
            body = body[:-1]
    if "(" in body or ")" in body:
        raise ParseError("periodic group must be last", text=text)
    items = [t for t in body.split(",")] if body.strip() else []
    for i, tok in enumerate(items):
        mt = _TOKEN.match(tok)
        if not mt:
            raise ParseError(f"bad partial quotient {tok!r}", text=text)
        a = int(mt.group(1))
        if mt.group(2):
            if i != len(items) - 1 or tail is not None:
                raise ParseError("a^inf must be the last entry", text=text)
            tail = [a]
        else:
            head.append(a)
    try:
        return ContinuedFraction(tuple(head), tuple(tail or ()))
    except ValueError as exc:
        raise ParseError(str(exc), text=text) from exc


def format_bracket(cf: ContinuedFraction) -> str:
    parts = [str(a) for a in cf.head]
    if cf.tail:
        parts.append("(" + ",".join(str(a) for a in cf.tail) + ")")
    return "[" + ",".join(parts) + "]"


@dataclass(frozen=True)
class Convergent:
    k: int
    p: int
    q: int

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


def convergents(omega: ContinuedFraction, count: int) -> list[Convergent]:
    if count < 1:
        raise ValueError("count must be >= 1")
    if omega.is_rational and count > len(omega.head):
        raise ExhaustedExpansion("rational expansion exhausted", count=count, length=len(omega.head))
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1
    it = omega.quotients()
    for k in range(1, count + 1):
        a = next(it)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append(Convergent(k, p1, q1))
    return out


def convergents_upto(omega: ContinuedFraction, q_max: int) -> list[Convergent]:
    """All convergents with q <= q_max."""
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1
    for k, a in enumerate(omega.quotients(), start=1):
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > q_max:
            break
        out.append(Convergent(k, p1, q1))
        if omega.is_rational and k == len(omega.head):
            break
    return out


def _tail_value(tail: Sequence[int]):
    """Positive root of the period fixed-point quadratic (current context)."""
    p0, q0, p1, q1 = 1, 0, 0, 1
    for a in tail:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
    # tau = (p1 + tau p0)/(q1 + tau q0)  ->  q0 tau^2 + (q1 - p0) tau - p1 = 0
    b = mpfr(q1 - p0)
    return 2 * mpfr(p1) / (b + gmpy2.sqrt(b * b + 4 * mpfr(q0) * mpfr(p1)))


def value(omega: ContinuedFraction, ctx: PrecisionContext | None = None) -> mpfr:
    ctx = ctx or PrecisionContext(38)
    with ctx.local():
        if omega.tail:
            x = _tail_value(omega.tail)
        else:
            x = None
        for a in reversed(omega.head):
            x = 1 / (a + x) if x is not None else 1 / mpfr(a)
        return +x


def value_fraction(omega: ContinuedFraction) -> Fraction:
    if omega.tail:
        raise ValueError("irrational")
    x = None
    for a in reversed(omega.head):
        x = Fraction(1, 1) / (a + x) if x is not None else Fraction(1, a)
    return x


@dataclass(frozen=True)
class BryunoValue:
    omega: ContinuedFraction
    value: mpfr
    digits_valid: int

    def __float__(self):
        return float(self.value)


def bryuno(omega: ContinuedFraction, ctx: PrecisionContext | None = None) -> BryunoValue:
    """B(w) = -log w + w B(frac(1/w)), closed over the periodic tail."""
    ctx = ctx or PrecisionContext(38)
    if not omega.tail:
        raise RationalRotation("Bryuno function diverges at rationals", omega=omega.canonical())
    with gmpy2.context(precision=ctx.bits + 16):
        # orbit of the Gauss map over one tail period: tau_0, tau_1, ...
        m = len(omega.tail)
        taus = []
        for j in range(m):
            taus.append(_tail_value(omega.tail[j:] + omega.tail[:j]))
        L = mpfr(0)
        M = mpfr(1)
        for t in taus:
            L += M * -gmpy2.log(t)
            M *= t
        b = L / (1 - M)
        x = taus[0]
        for a in reversed(omega.head):
            x = 1 / (a + x)
            b = -gmpy2.log(x) + x * b
    with ctx.local():
        return BryunoValue(omega, +b, ctx.digits - 10)


# ----------------------------------------------------------------------------
# families


def sequence(family: str, indices: Sequence[int]) -> list[ContinuedFraction]:
    """Instantiate a bracket pattern with one ``n`` placeholder, e.g. "[2,n,1^inf]"."""
    if family.count("n") != 1:
        raise ParseError("family needs exactly one 'n' placeholder", family=family)
    out = []
    for n in indices:
        if int(n) < 1:
            raise ValueError("indices must be positive")
        out.append(parse_bracket(family.replace("n", str(int(n)))))
    return out


def gauss_orbit_check(omega: ContinuedFraction, ctx: PrecisionContext) -> mpfr:
    """|B(w) + log w - w B(frac 1/w)|, the defining identity residual."""
    with ctx.local():
        w = value(omega, ctx)
        shifted = ContinuedFraction(omega.head[1:], omega.tail) if omega.head else \
            ContinuedFraction((), omega.tail[1:] + omega.tail[:1])
        return abs(bryuno(omega, ctx).value + gmpy2.log(w) - w * bryuno(shifted, ctx).value)

