"""Periodic orbits of the standard map and their Greene residues.

Orbit finding works on the reversible (symmetric) family through x = pi:
the half orbit is obtained by shooting along the symmetry line with a
bracketed safeguarded Newton on the initial momentum, mirrored into the full
orbit, and polished by Newton on the full cyclic Lagrangian system. The full
cyclic Newton alone is used when a continuation orbit with the same p/q is
supplied.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from math import gcd
from typing import Optional, Sequence

import gmpy2
from gmpy2 import mpfr

from .errors import NewtonDivergence, PrecisionExhausted, SingularJacobian, SingularSystem, BudgetExhausted
from .numerics import CyclicTridiagonalSystem, PrecisionContext, fmt, solve_cyclic_tridiagonal, to_real

DEFAULT_SCHEDULE = (38, 76, 150, 300, 600, 1200)
HEADROOM = 30


@dataclass
class PeriodicOrbit:
    p: int
    q: int
    epsilon: str
    points: list
    closure_error: mpfr
    digits: int
    momentum0: Optional[mpfr] = None

    @property
    def ctx(self) -> PrecisionContext:
        return PrecisionContext(self.digits)

    def eps(self) -> mpfr:
        return self.ctx.real(self.epsilon)

    def is_monotone(self) -> bool:
        pts = self.points
        return all(pts[i + 1] > pts[i] for i in range(len(pts) - 1))

    def initial_point(self):
        """(x_1, y_1) with y_1 = x_1 - x_0 on the lift."""
        with self.ctx.local():
            two_pi_p = 2 * gmpy2.const_pi() * self.p
            prev = self.points[-1] - two_pi_p
            return self.points[0], self.points[0] - prev


@dataclass
class Residue:
    value: mpfr
    trace: mpfr
    cancellation_digits: int
    digits: int
    p: int = 0
    q: int = 1
    epsilon: str = "0"
    orbit: Optional[PeriodicOrbit] = field(default=None, repr=False, compare=False)

    def __float__(self):
        return float(self.value)

    @property
    def value_digits(self) -> float:
        """Significant digits left in R itself (small R loses them in 2 - T)."""
        if self.value == 0:
            # exact only for the unperturbed map; otherwise T rounded to 2
            return float(self.digits) if mpfr(self.epsilon) == 0 else 0.0
        return self.digits - self.cancellation_digits - max(0.0, float(gmpy2.log10(abs(self.trace) / abs(self.value))))


def eps_string(epsilon) -> str:
    if isinstance(epsilon, str):
        return epsilon.strip()
    if isinstance(epsilon, float):
        return repr(epsilon)
    if isinstance(epsilon, mpfr):
        return format(epsilon, ".40g")
    return str(epsilon)


# ----------------------------------------------------------------------------
# residuals and Newton on the cyclic system


def lagrangian_residual(points: Sequence, p: int, eps) -> list:
    """F_i = x_{i+1} - 2 x_i + x_{i-1} - eps sin x_i with x_{i+q} = x_i + 2 pi p."""
    q = len(points)
    shift = 2 * gmpy2.const_pi() * p
    out = []
    for i in range(q):
        xp = points[i + 1] if i + 1 < q else points[0] + shift
        xm = points[i - 1] if i > 0 else points[-1] - shift
        out.append(xp - 2 * points[i] + xm - eps * gmpy2.sin(points[i]))
    return out


def newton_cyclic(points: Sequence, p: int, eps, ctx: PrecisionContext, max_iter: int = 100) -> tuple:
    """Newton on the full Lagrangian system. Returns (points, ||F||)."""
    tol = ctx.tol(10)
    with ctx.local():
        x = [to_real(v) for v in points]
        q = len(x)
        ones = [mpfr(1)] * q
        first = last = None
        grow = 0
        for it in range(max_iter + 1):
            F = lagrangian_residual(x, p, eps)
            err = max(abs(f) for f in F)
            if err <= tol:
                return x, err
            if it == max_iter:
                break
            if first is None:
                first = err
            else:
                grow = grow + 1 if err > last else 0
                if grow >= 3 or err > 1e3 * first:
                    raise NewtonDivergence("residual growing", q=q, iteration=it, residual=float(err))
            last = err
            diag = [-2 - eps * gmpy2.cos(v) for v in x]
            try:
                dx = solve_cyclic_tridiagonal(CyclicTridiagonalSystem(diag, ones, [-f for f in F]), ctx)
            except SingularSystem as exc:
                raise SingularJacobian("orbit Jacobian singular", q=q, **exc.context) from exc
            x = [x[i] + dx[i] for i in range(q)]
        raise NewtonDivergence("Newton step limit", q=q, residual=float(err))


# ----------------------------------------------------------------------------
# symmetric shooting


def _half(q: int) -> int:
    return q // 2 if q % 2 == 0 else (q - 1) // 2


def shoot(p: int, q: int, eps, y0, with_derivative: bool = True):
    """Mismatch of the reversibility condition after half a period when
    starting from (pi, y0); zero exactly on symmetric p/q orbits."""
    pi = gmpy2.const_pi()
    x = pi
    y = y0
    dx = mpfr(0)
    dy = mpfr(1)
    sc = gmpy2.sin_cos
    for _ in range(_half(q)):
        s, c = sc(x)
        y = y + eps * s
        if with_derivative:
            dy = dy + eps * c * dx
            dx = dx + dy
        x = x + y
    if q % 2 == 0:
        return x - pi * (p + 1), dx
    s, c = sc(x)
    y1 = y + eps * s
    if with_derivative:
        dy = dy + eps * c * dx
        return 2 * x + y1 - 2 * pi * (p + 1), 2 * dx + dy
    return 2 * x + y1 - 2 * pi * (p + 1), None


def _symmetric_points(p: int, q: int, eps, y0) -> list:
    pi = gmpy2.const_pi()
    h = _half(q)
    xs = [pi]
    x, y = pi, y0
    for _ in range(h):
        y = y + eps * gmpy2.sin(x)
        x = x + y
        xs.append(x)
    if q % 2 == 0:
        xs[h] = pi * (p + 1)
    full = xs + [None] * (q - len(xs))
    two = 2 * pi * (p + 1)
    for j in range(1, q - h):
        full[q - j] = two - xs[j]
    return full


def _root_y0(p: int, q: int, eps, y0, ctx: PrecisionContext, d0=None):
    g0, dg0 = shoot(p, q, eps, y0)
    if g0 == 0:
        return y0
    bits = ctx.bits
    if d0 is None:
        d = abs(g0 / dg0) * 2 if dg0 != 0 else mpfr(1) / q
        d = min(max(d, mpfr(2) ** (-bits + 30)), mpfr(1) / q)
    else:
        d = to_real(d0)
    direction = -1 if g0 > 0 else 1  # twist: g increases with y0
    a, ga = y0, g0
    while True:
        b = y0 + direction * d
        gb, _ = shoot(p, q, eps, b, with_derivative=False)
        if (gb > 0) != (ga > 0):
            break
        a, ga = b, gb
        d *= 4
        if d > 4:
            raise NewtonDivergence("no sign change along the symmetry line", p=p, q=q)
    lo, hi, glo = (a, b, ga) if a < b else (b, a, gb)
    x = (lo + hi) / 2
    tol = mpfr(2) ** (-bits + 20) * (1 + abs(x))
    for _ in range(2 * bits):
        gx, dgx = shoot(p, q, eps, x)
        if gx == 0:
            return x
        if (gx > 0) == (glo > 0):
            lo, glo = x, gx
        else:
            hi = x
        if hi - lo < tol:
            return x
        xn = x - gx / dgx if dgx != 0 else None
        if xn is None or not (lo < xn < hi):
            xn = (lo + hi) / 2
        if abs(xn - x) < tol:
            return xn
        x = xn
    return x


def predict_momentum(guide: PeriodicOrbit, p: int, q: int) -> mpfr:
    """Initial momentum on the symmetry line for p/q from the conjugacy of a
    neighbouring orbit (cubic periodic interpolation of u(alpha))."""
    pi = gmpy2.const_pi()
    two = 2 * pi
    pp, qq = guide.p, guide.q
    pairs = []
    for j, x in enumerate(guide.points):
        alpha = two * pp * j / qq
        pairs.append((gmpy2.fmod(alpha, two), to_real(x) - (pi + alpha)))
    pairs.sort(key=lambda t: t[0])
    A = [a for a, _ in pairs]
    U = [u for _, u in pairs]
    n = len(A)
    s = gmpy2.fmod(two * p / q, two)
    if n < 4:
        return two * p / q
    i = bisect.bisect_right(A, s) - 1
    pts = []
    for k in (-1, 0, 1, 2):
        ii = i + k
        pts.append((A[ii % n] + two * (ii // n), U[ii % n]))
    val = mpfr(0)
    for m in range(4):
        w = mpfr(1)
        for l in range(4):
            if l != m:
                w *= (s - pts[l][0]) / (pts[m][0] - pts[l][0])
        val += w * pts[m][1]
    return two * p / q + val


def _check_pq(p: int, q: int):
    if q < 1 or p < 0 or (q > 1 and p >= q) or (q == 1 and p > 1) or gcd(p, q) != 1:
        raise ValueError(f"need reduced 0 <= p < q (or 0/1, 1/1), got {p}/{q}")


def find_orbit(p: int, q: int, epsilon, ctx: PrecisionContext,
               continuation: Optional[PeriodicOrbit] = None,
               guide: Optional[PeriodicOrbit] = None,
               max_newton: int = 100) -> PeriodicOrbit:
    """Elliptic (perturbative) p/q orbit through the symmetry line x = pi.

    q = 1 accepts p in {0, 1}: the same fixed point on the cylinder.
    """
    _check_pq(p, q)
    eps_s = eps_string(epsilon)
    with ctx.local():
        eps = to_real(eps_s)
        if eps < 0:
            raise ValueError("epsilon must be >= 0")
        pi = gmpy2.const_pi()
        if q == 1:
            return PeriodicOrbit(p, 1, eps_s, [+pi], mpfr(0), ctx.digits, 2 * pi * p)
        if continuation is not None and (continuation.p, continuation.q) == (p, q):
            try:
                pts, err = newton_cyclic(continuation.points, p, eps, ctx, max_newton)
                return PeriodicOrbit(p, q, eps_s, pts, err, ctx.digits, pts[0] - (pts[-1] - 2 * pi * p))
            except (NewtonDivergence, SingularJacobian):
                pass
        try:
            pts, y0 = _shoot_and_polish(p, q, eps, ctx, guide)
        except NewtonDivergence:
            pts, y0 = _continuation_from_zero(p, q, eps, ctx)
        err = max(abs(f) for f in lagrangian_residual(pts, p, eps))
        return PeriodicOrbit(p, q, eps_s, pts, err, ctx.digits, y0)


def _shoot_and_polish(p, q, eps, ctx, guide=None, y_seed=None):
    pi = gmpy2.const_pi()
    d0 = None
    if y_seed is not None:
        y0 = y_seed
    elif guide is not None and guide.q >= 8 and guide.q < q:
        y0 = predict_momentum(guide, p, q)
    else:
        y0 = 2 * pi * p / q
        d0 = mpfr(1) / (q * q)
    y0 = _root_y0(p, q, eps, y0, ctx, d0)
    pts = _symmetric_points(p, q, eps, y0)
    pts, _ = newton_cyclic(pts, p, eps, ctx, max_iter=12)
    return pts, y0


def _continuation_from_zero(p, q, eps, ctx, h0=mpfr("0.05"), floor=mpfr("1e-4")):
    pi = gmpy2.const_pi()
    e = mpfr(0)
    y0 = 2 * pi * p / q
    h = h0
    pts = None
    while e < eps:
        e1 = min(eps, e + h)
        try:
            pts, y1 = _shoot_and_polish(p, q, e1, ctx, y_seed=y0)
            e, y0 = e1, y1
            h = min(h0, h * 2)
        except NewtonDivergence:
            h /= 2
            if h < floor:
                raise NewtonDivergence("continuation step below floor", p=p, q=q, epsilon=str(e))
    if pts is None:
        pts, y0 = _shoot_and_polish(p, q, eps, ctx, y_seed=y0)
    return pts, y0


# ----------------------------------------------------------------------------
# residue


def residue(orbit: PeriodicOrbit, ctx: Optional[PrecisionContext] = None, check: bool = True) -> Residue:
    """R = (2 - T)/4, T the trace of the tangent map over one period."""
    ctx = ctx or orbit.ctx
    with ctx.local():
        eps = to_real(orbit.epsilon)
        m00, m01, m10, m11 = mpfr(1), mpfr(0), mpfr(0), mpfr(1)
        mx = mpfr(1)
        for x in orbit.points:
            a = eps * gmpy2.cos(x)
            n00 = m00 + a * m00 + m10
            n01 = m01 + a * m01 + m11
            m10 = a * m00 + m10
            m11 = a * m01 + m11
            m00, m01 = n00, n01
            mx = max(mx, abs(m00), abs(m01), abs(m10), abs(m11))
        T = m00 + m11
        if T == 0:
            canc = float(ctx.digits)
        else:
            canc = max(0.0, float(gmpy2.log10(mx / abs(T))))
        cd = int(math.ceil(canc))
        R = (2 - T) / 4
        if check and canc > ctx.digits - HEADROOM:
            raise PrecisionExhausted("trace cancellation exceeds headroom", p=orbit.p, q=orbit.q,
                                     cancellation_digits=cd, digits=ctx.digits)
        return Residue(R, T, cd, ctx.digits, orbit.p, orbit.q, orbit.epsilon, orbit)


def residue_at(p: int, q: int, epsilon, budget: Sequence[int] = DEFAULT_SCHEDULE,
               guide: Optional[PeriodicOrbit] = None, continuation: Optional[PeriodicOrbit] = None,
               start_digits: int = 0, min_value_digits: float = 0) -> Residue:
    """Orbit + residue under escalating precision until the trace keeps
    HEADROOM digits (and R itself keeps min_value_digits, if asked)."""
    tried = []
    for digits in budget:
        if digits < start_digits:
            continue
        ctx = PrecisionContext(digits)
        try:
            cont = continuation if continuation is not None and continuation.digits <= digits else None
            orb = find_orbit(p, q, epsilon, ctx, continuation=cont, guide=guide)
            r = residue(orb, ctx)
            if r.value_digits < min_value_digits and digits != budget[-1]:
                tried.append((digits, "value_digits"))
                continue
            return r
        except (PrecisionExhausted, NewtonDivergence, SingularJacobian) as exc:
            tried.append((digits, exc.code))
    raise BudgetExhausted("precision schedule exhausted", p=p, q=q, epsilon=eps_string(epsilon), tried=tried)


# ----------------------------------------------------------------------------
# serialisation


def orbit_to_text(orbit: PeriodicOrbit) -> str:
    nd = orbit.digits + 5
    lines = [f"{orbit.p} {orbit.q} {orbit.epsilon} {orbit.digits}"]
    lines += [fmt(x, nd) for x in orbit.points]
    return "\n".join(lines) + "\n"


def orbit_from_text(text: str) -> PeriodicOrbit:
    rows = text.strip().splitlines()
    p, q, eps_s, digits = rows[0].split()
    p, q, digits = int(p), int(q), int(digits)
    ctx = PrecisionContext(digits)
    with ctx.local():
        pts = [mpfr(r) for r in rows[1:1 + q]]
        if len(pts) != q:
            raise ValueError("truncated orbit file")
        err = max(abs(f) for f in lagrangian_residual(pts, p, mpfr(eps_s)))
        y0 = pts[0] - (pts[-1] - 2 * gmpy2.const_pi() * p)
    return PeriodicOrbit(p, q, eps_s, pts, err, digits, y0)
