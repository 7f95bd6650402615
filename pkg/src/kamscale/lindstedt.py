"""Lindstedt series of the conjugating function u(alpha, eps).

u solves D^2 u = eps sin(alpha + u), D^2 f(a) = f(a + 2 pi w) - 2 f(a) + f(a - 2 pi w),
order by order in eps. Order k is a sine polynomial of degree k. Products
are done by collocation on M = 2K + 2 equispaced angles, where degree <= K
trigonometric polynomials are represented exactly, so each order costs
O(K M) and the whole series O(K^3). cos u and sin u follow from the
exponential recurrence k E_k = sum_j j w_j E_{k-j}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import gmpy2
from gmpy2 import mpfr

from .dynamics import PhasePoint
from .errors import RationalRotation, SmallDivisorUnderflow
from .numerics import PrecisionContext, fmt, to_real
from .rotation import ContinuedFraction, value


@dataclass
class FourierPolynomial:
    """u^(k)(alpha) = sum_nu coeffs[nu] sin(nu alpha), 1 <= nu <= k."""

    order: int
    coeffs: dict

    def __call__(self, alpha) -> mpfr:
        return sum((c * gmpy2.sin(nu * alpha) for nu, c in self.coeffs.items()), mpfr(0))

    def sup_on_grid(self, n: int = 256) -> mpfr:
        two = 2 * gmpy2.const_pi()
        return max(abs(self(two * j / n)) for j in range(n))


@dataclass
class LindstedtSeries:
    omega: ContinuedFraction
    terms: list
    digits: int
    min_divisor: Optional[mpfr] = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return len(self.terms)

    @property
    def ctx(self) -> PrecisionContext:
        return PrecisionContext(self.digits)

    def at(self, alpha) -> list:
        """Taylor coefficients in eps of u(alpha, eps): [0, a_1, ..., a_K]."""
        with self.ctx.local():
            a = to_real(alpha)
            sins = {}
            out = [mpfr(0)]
            for t in self.terms:
                s = mpfr(0)
                for nu, c in t.coeffs.items():
                    if nu not in sins:
                        sins[nu] = gmpy2.sin(nu * a)
                    s += c * sins[nu]
                out.append(s)
            return out

    def csv(self) -> str:
        rows = ["k,nu,s_nu"]
        for t in self.terms:
            for nu in sorted(t.coeffs):
                rows.append(f"{t.order},{nu},{fmt(t.coeffs[nu], self.digits)}")
        return "\n".join(rows) + "\n"


def coefficients(omega: ContinuedFraction, K: int, ctx: PrecisionContext) -> LindstedtSeries:
    if omega.is_rational:
        raise RationalRotation("Lindstedt series needs an irrational rotation number", omega=omega.canonical())
    if K < 1:
        raise ValueError("K must be >= 1")
    M = 2 * K + 2
    with ctx.local():
        pi = gmpy2.const_pi()
        w = value(omega, ctx)
        # sin(2 pi j / M) for j mod M: every sin(nu alpha_m) is one of these
        sin_tab = [gmpy2.sin(2 * pi * j / M) for j in range(M)]
        cos_tab = [sin_tab[(j + M // 4) % M] if M % 4 == 0 else gmpy2.cos(2 * pi * j / M) for j in range(M)]
        thresh = mpfr(10) ** (-ctx.digits / 2)
        div = {}
        min_div = None
        for nu in range(1, K + 1):
            s = gmpy2.sin(pi * nu * w)
            if abs(s) < thresh:
                raise SmallDivisorUnderflow("small divisor below threshold", nu=nu, digits=ctx.digits)
            div[nu] = -4 * s * s
            min_div = abs(s) if min_div is None else min(min_div, abs(s))
        sin_a = sin_tab
        cos_a = cos_tab
        # grid values of u^(j), cos-part C_j and sin-part S_j of cos u / sin u
        U: list = [None]
        C: list = [[mpfr(1)] * M]
        S: list = [[mpfr(0)] * M]
        terms = []
        two_over_M = mpfr(2) / M
        for k in range(1, K + 1):
            # right-hand side [sin(alpha + u)]_{k-1} on the grid
            Ck1, Sk1 = C[k - 1], S[k - 1]
            g = [sin_a[m] * Ck1[m] + cos_a[m] * Sk1[m] for m in range(M)]
            coeffs = {}
            for nu in range(k % 2 if k % 2 else 2, k + 1, 2):
                acc = mpfr(0)
                for m in range(1, M):
                    gm = g[m]
                    if gm:
                        acc += gm * sin_tab[(nu * m) % M]
                coeffs[nu] = acc * two_over_M / div[nu]
            terms.append(FourierPolynomial(k, coeffs))
            uk = [mpfr(0)] * M
            for nu, c in coeffs.items():
                for m in range(1, M):
                    uk[m] += c * sin_tab[(nu * m) % M]
            U.append(uk)
            # exponential recurrence for e^{iu}
            ck = [mpfr(0)] * M
            sk = [mpfr(0)] * M
            for j in range(1, k + 1):
                uj = U[j]
                Cj, Sj = C[k - j], S[k - j]
                for m in range(M):
                    t = j * uj[m]
                    if t:
                        ck[m] -= t * Sj[m]
                        sk[m] += t * Cj[m]
            C.append([v / k for v in ck])
            S.append([v / k for v in sk])
        return LindstedtSeries(omega, terms, ctx.digits, min_div)


def first_order(omega: ContinuedFraction, ctx: PrecisionContext) -> mpfr:
    """Closed-form sin-coefficient of u^(1): -1 / (4 sin^2(pi w))."""
    with ctx.local():
        s = gmpy2.sin(gmpy2.const_pi() * value(omega, ctx))
        return -1 / (4 * s * s)


def evaluate(series: LindstedtSeries, alpha, epsilon) -> mpfr:
    with series.ctx.local():
        a = series.at(alpha)
        e = to_real(epsilon)
        out = mpfr(0)
        for c in reversed(a[1:]):
            out = (out + c) * e
        return out


def curve(series: LindstedtSeries, alpha, epsilon) -> PhasePoint:
    """Point of the invariant curve: x = alpha + u(alpha), y = 2 pi w + u(alpha) - u(alpha - 2 pi w)."""
    with series.ctx.local():
        a = to_real(alpha)
        shift = 2 * gmpy2.const_pi() * value(series.omega, series.ctx)
        u0 = evaluate(series, a, epsilon)
        um = evaluate(series, a - shift, epsilon)
        return PhasePoint(a + u0, shift + u0 - um)


def functional_residual(series: LindstedtSeries, alpha, epsilon) -> mpfr:
    """D^2 u - eps sin(alpha + u) for the truncated series."""
    with series.ctx.local():
        a = to_real(alpha)
        e = to_real(epsilon)
        shift = 2 * gmpy2.const_pi() * value(series.omega, series.ctx)
        u = lambda t: evaluate(series, t, e)
        u0 = u(a)
        return u(a + shift) - 2 * u0 + u(a - shift) - e * gmpy2.sin(a + u0)


@dataclass
class RootTest:
    rho: mpfr
    spread: mpfr
    norms: list


def radius_root_test(series: LindstedtSeries, grid: int = 256, window: Optional[int] = None) -> RootTest:
    """(limsup_k sup_alpha |u^(k)|^(1/k))^(-1), limsup taken as the max over
    the last K/3 orders; spread compares against the last K/6 orders."""
    K = series.K
    with series.ctx.local():
        norms = [t.sup_on_grid(grid) for t in series.terms]
        roots = [n ** (mpfr(1) / (k + 1)) if n > 0 else mpfr(0) for k, n in enumerate(norms)]
        w = window or max(1, K // 3)
        a = max(roots[K - w:])
        b = max(roots[K - max(1, w // 2):])
        rho = 1 / a
        return RootTest(rho, abs(1 / b - rho), norms)


def root_test_from_norms(norms: Sequence, window: Optional[int] = None) -> mpfr:
    K = len(norms)
    w = window or max(1, K // 3)
    roots = [mpfr(n) ** (mpfr(1) / (k + 1)) for k, n in enumerate(norms)]
    return 1 / max(roots[K - w:])
