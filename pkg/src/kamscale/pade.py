"""Pade approximants of the Lindstedt series in eps at a fixed angle, pole
extraction, and the heuristic radius rho_1."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import AllPolesSpurious, DegenerateSystem, SingularSystem, UnsupportedResonance
from .lindstedt import LindstedtSeries, coefficients
from .numerics import PrecisionContext, fmt, poly_eval, polynomial_roots, solve_dense, to_real
from .rotation import ContinuedFraction, convergents, value

LAMBDA_C_FACTOR = "0.827524"  # lambda_c / (4 pi^2)
RESONANCE_CONSTANTS = {1: Fraction(1), 2: Fraction(-1, 8), 3: Fraction(-1, 24)}
# doublets in the Lindstedt approximants sit ~digits/5 below unity, genuine poles near 1e-5
FROISSART_POWER = 8


@dataclass
class PadeApproximant:
    L: int
    M: int
    num: list
    den: list
    alpha0: Optional[mpfr] = None
    scale: mpfr = field(default_factory=lambda: mpfr(1))

    def __call__(self, eps) -> object:
        z = eps / self.scale
        return poly_eval(self.num, z) / poly_eval(self.den, z)


@dataclass
class Pole:
    z: mpc
    residue_magnitude: mpfr
    zero_distance: mpfr
    froissart: bool

    @property
    def modulus(self) -> mpfr:
        return abs(self.z)

    @property
    def angle(self) -> mpfr:
        return gmpy2.atan2(self.z.imag, self.z.real)


@dataclass
class RadiusEstimate:
    rho: mpfr
    method: str
    details: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.rho)


def pade(series: Sequence, L: int, M: int, ctx: PrecisionContext, alpha0=None, scale=None) -> PadeApproximant:
    """[L/M] from Taylor coefficients c_0..c_{L+M}; den(0) = 1.

    With scale s the approximant is built in z = eps/s (coefficients c_k s^k),
    which only changes conditioning.
    """
    if len(series) < L + M + 1:
        raise ValueError(f"need {L + M + 1} coefficients, got {len(series)}")
    with ctx.local():
        s = to_real(scale) if scale is not None else mpfr(1)
        c = [to_real(series[k]) * s ** k for k in range(L + M + 1)]
        cc = lambda i: c[i] if i >= 0 else mpfr(0)
        if M > 0:
            A = [[cc(L + i - j) for j in range(1, M + 1)] for i in range(1, M + 1)]
            rhs = [-c[L + i] for i in range(1, M + 1)]
            try:
                b = [mpfr(1)] + solve_dense(A, rhs, ctx)
            except SingularSystem as exc:
                raise DegenerateSystem("Toeplitz system singular", L=L, M=M) from exc
        else:
            b = [mpfr(1)]
        a = [sum((b[j] * c[i - j] for j in range(0, min(i, M) + 1)), mpfr(0)) for i in range(L + 1)]
        # order of contact
        t = []
        for k in range(L + M + 1):
            v = a[k] if k <= L else mpfr(0)
            for j in range(1, min(k, M) + 1):
                v -= b[j] * t[k - j]
            t.append(v)
        cmax = max(abs(v) for v in c) or mpfr(1)
        tol = mpfr(10) ** (-ctx.digits / 2) * cmax
        bad = [k for k in range(L + M + 1) if abs(t[k] - c[k]) > tol]
        if bad:
            raise DegenerateSystem("order-of-contact check failed", L=L, M=M, first=bad[0])
        return PadeApproximant(L, M, a, b, to_real(alpha0) if alpha0 is not None else None, s)


def _trim(coeffs):
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def froissart_threshold(digits: int, power: int = FROISSART_POWER) -> mpfr:
    """Pole-zero distance below which a pair counts as spurious: 10^(-digits/power)."""
    return mpfr(10) ** (-mpfr(digits) / power)


def poles(approx: PadeApproximant, ctx: PrecisionContext, froissart_tol=None) -> list:
    with ctx.local():
        tol = to_real(froissart_tol) if froissart_tol is not None else froissart_threshold(ctx.digits)
        den = _trim(approx.den)
        if len(den) < 2:
            return []
        num = _trim(approx.num)
        nz = 0
        while nz < len(num) - 1 and num[nz] == 0:
            nz += 1
        # exact zeros at the origin (c_0 = 0) are kept out of the root finder
        zs = [mpc(0)] * nz
        if len(num) - nz >= 2:
            zs += polynomial_roots(num[nz:], ctx)
        ps = polynomial_roots(den, ctx)
        dden = [k * den[k] for k in range(1, len(den))]
        out = []
        s = approx.scale
        for p in ps:
            dist = min((abs(p - z) for z in zs), default=mpfr("inf"))
            dv = poly_eval(dden, p)
            res = abs(poly_eval(num, p) / dv) * s if dv != 0 else mpfr("inf")
            out.append(Pole(p * s, res, dist * s, bool(dist * s < tol)))
        out.sort(key=lambda P: (P.modulus, P.z.imag))
        return out


def poles_csv(pole_list: Sequence[Pole]) -> str:
    rows = ["re,im,residue_magnitude,froissart_flag"]
    for P in pole_list:
        rows.append(f"{fmt(P.z.real, 20)},{fmt(P.z.imag, 20)},{fmt(P.residue_magnitude, 12)},{int(P.froissart)}")
    return "\n".join(rows) + "\n"


def _taylor_scale(c: Sequence) -> mpfr:
    """Rough radius from the last third of the coefficients (root test)."""
    K = len(c) - 1
    vals = [abs(c[k]) ** (mpfr(1) / k) for k in range(max(1, 2 * K // 3), K + 1) if c[k] != 0]
    return 1 / max(vals) if vals else mpfr(1)


def rho_pade(omega: ContinuedFraction, alpha0=1, order: int = 80, ctx: Optional[PrecisionContext] = None,
             series: Optional[LindstedtSeries] = None, direction=None, direction_tol="0.2",
             froissart_tol=None) -> RadiusEstimate:
    """Smallest modulus among poles of [order/order] that survive the
    Froissart filter (optionally restricted to a direction in the eps plane)."""
    ctx = ctx or PrecisionContext(120)
    K = 2 * order
    if series is None or series.K < K:
        series = coefficients(omega, K, ctx)
    with ctx.local():
        c = series.at(alpha0)[: K + 1]
        s = _taylor_scale(c)
        approx = pade(c, order, order, ctx, alpha0=alpha0, scale=s)
        pl = poles(approx, ctx, froissart_tol)
        good = [P for P in pl if not P.froissart]
        if direction is not None:
            th = to_real(direction)
            dt = to_real(direction_tol)
            good = [P for P in good if abs(gmpy2.remainder(P.angle - th, 2 * gmpy2.const_pi())) <= dt]
        if not good:
            raise AllPolesSpurious("every pole is a Froissart doublet", omega=omega.canonical(), order=order)
        best = min(good, key=lambda P: P.modulus)
        return RadiusEstimate(best.modulus, "pade_poles",
                              {"pole": best.z, "angle": best.angle, "order": order, "poles": pl,
                               "spurious": sum(P.froissart for P in pl)})


def nearest_resonance(omega: ContinuedFraction) -> tuple:
    """p/q preceding the largest partial quotient of the head."""
    if not omega.head:
        raise UnsupportedResonance("no dominant partial quotient", omega=omega.canonical())
    j = max(range(len(omega.head)), key=lambda i: (omega.head[i], -i))
    if j == 0:
        return 0, 1
    c = convergents(omega, j)[-1]
    return c.p, c.q


def rho1(omega: ContinuedFraction, ctx: Optional[PrecisionContext] = None, resonance: Optional[tuple] = None,
         lambda_factor: str = LAMBDA_C_FACTOR) -> RadiusEstimate:
    """rho_1 = eta^(2/q) (q lambda_c / |C_{p/q}|)^(1/q), eta = |w - p/q|."""
    ctx = ctx or PrecisionContext(40)
    p, q = resonance if resonance is not None else nearest_resonance(omega)
    if q not in RESONANCE_CONSTANTS or (q == 3 and p not in (1, 2)):
        raise UnsupportedResonance("resonance constant unknown", omega=omega.canonical(), p=p, q=q)
    C = RESONANCE_CONSTANTS[q]
    with ctx.local():
        pi = gmpy2.const_pi()
        lam = 4 * pi * pi * mpfr(lambda_factor)
        eta = abs(value(omega, ctx) - mpfr(p) / q)
        absC = abs(mpfr(C.numerator) / C.denominator)
        rho = eta ** (mpfr(2) / q) * (q * lam / absC) ** (mpfr(1) / q)
        return RadiusEstimate(rho, "heuristic_rho1", {"p": p, "q": q, "eta": eta, "C": str(C), "lambda_c": lam})


def rho_pade_stability(omega: ContinuedFraction, alpha0=1, order: int = 60, step: int = 10,
                       ctx: Optional[PrecisionContext] = None, rel_tol: str = "0.01", froissart_tol=None) -> tuple:
    """rho_P at [N/N] and [N+step/N+step] plus their relative spread; warns above rel_tol."""
    ctx = ctx or PrecisionContext(120)
    series = coefficients(omega, 2 * (order + step), ctx)
    a = rho_pade(omega, alpha0, order, ctx, series=series, froissart_tol=froissart_tol)
    b = rho_pade(omega, alpha0, order + step, ctx, series=series, froissart_tol=froissart_tol)
    with ctx.local():
        spread = abs(a.rho - b.rho) / b.rho
    if spread > to_real(rel_tol):
        warnings.warn(f"rho_P unstable between orders {order} and {order + step}: {fmt(spread, 4)}",
                      RuntimeWarning, stacklevel=2)
    return a, b, spread
