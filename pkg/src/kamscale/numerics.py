"""Arbitrary-precision plumbing on top of gmpy2/MPFR.

Precision is an explicit PrecisionContext passed to every kernel; nothing
here touches the global gmpy2 context except through ``ctx.local()``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Sequence

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import DegenerateAbscissae, NoConvergence, SingularSystem

LOG2_10 = math.log2(10)


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision in decimal digits (round-to-nearest)."""

    digits: int = 38

    def __post_init__(self):
        if int(self.digits) != self.digits or self.digits < 17:
            raise ValueError(f"digits must be an integer >= 17, got {self.digits}")

    @property
    def bits(self) -> int:
        return int(math.ceil(self.digits * LOG2_10)) + 4

    def local(self):
        return gmpy2.context(precision=self.bits)

    def real(self, x) -> mpfr:
        with self.local():
            return to_real(x)

    def tol(self, shift: int = 0) -> mpfr:
        """10^(-digits+shift) as an mpfr."""
        with self.local():
            return mpfr(10) ** (shift - self.digits)

    def with_digits(self, digits: int) -> "PrecisionContext":
        return PrecisionContext(digits)


def to_real(x) -> mpfr:
    """Convert under the *current* gmpy2 context. Strings are rounded once."""
    if isinstance(x, Fraction):
        return mpfr(x.numerator) / mpfr(x.denominator)
    if isinstance(x, Decimal):
        return mpfr(str(x))
    if isinstance(x, str):
        return mpfr(x.strip())
    return mpfr(x)


def fmt(x, digits: int = 20) -> str:
    """Fixed decimal rendering used in every output file (deterministic)."""
    x = mpfr(x) if not isinstance(x, mpfr) else x
    if not gmpy2.is_finite(x):
        return str(float(x))
    return "{0:.{1}g}".format(x, digits) if x != 0 else "0"


# ----------------------------------------------------------------------------
# tridiagonal / cyclic tridiagonal


@dataclass
class CyclicTridiagonalSystem:
    """Row i reads off[i-1] x_{i-1} + diag[i] x_i + off[i] x_{i+1} = rhs[i],
    indices mod q. For q = 1 and q = 2 the wrap-around entries add up."""

    diag: Sequence
    off: Sequence
    rhs: Sequence

    def __post_init__(self):
        q = len(self.diag)
        if q < 1 or len(self.off) != q or len(self.rhs) != q:
            raise ValueError("diag, off, rhs must share a length q >= 1")

    @property
    def q(self) -> int:
        return len(self.diag)

    def dense(self) -> list[list]:
        q = self.q
        A = [[mpfr(0)] * q for _ in range(q)]
        for i in range(q):
            A[i][i] += self.diag[i]
            A[i][(i + 1) % q] += self.off[i]
            A[(i + 1) % q][i] += self.off[i]
        return A

    def apply(self, x: Sequence) -> list:
        q = self.q
        return [self.off[i - 1] * x[i - 1] + self.diag[i] * x[i] + self.off[i] * x[(i + 1) % q]
                for i in range(q)]


def _thomas(sub, diag, sup, rhs, thresh):
    """Plain tridiagonal solve; sub[i] multiplies x_{i-1}, sup[i] x_{i+1}."""
    n = len(diag)
    if n == 0:
        return []
    cp = [mpfr(0)] * n
    dp = [mpfr(0)] * n
    piv = diag[0]
    if abs(piv) <= thresh:
        raise SingularSystem("pivot underflow", row=0)
    cp[0] = sup[0] / piv
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - sub[i] * cp[i - 1]
        if abs(piv) <= thresh:
            raise SingularSystem("pivot underflow", row=i)
        cp[i] = sup[i] / piv if i < n - 1 else mpfr(0)
        dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / piv
    x = [mpfr(0)] * n
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x


def solve_tridiagonal(sub, diag, sup, rhs, ctx: PrecisionContext) -> list:
    with ctx.local():
        scale = max(abs(mpfr(d)) for d in diag) + 2 * max([abs(mpfr(s)) for s in list(sub) + list(sup)] + [mpfr(0)])
        return _thomas(sub, diag, sup, rhs, ctx.tol(5) * scale)


def solve_cyclic_tridiagonal(sys: CyclicTridiagonalSystem, ctx: PrecisionContext) -> list:
    """O(q) solve by Sherman-Morrison on top of Thomas."""
    q = sys.q
    with ctx.local():
        diag = [to_real(d) for d in sys.diag]
        off = [to_real(o) for o in sys.off]
        rhs = [to_real(r) for r in sys.rhs]
        scale = max(abs(d) for d in diag) + 2 * max(abs(o) for o in off)
        if scale == 0:
            raise SingularSystem("zero matrix")
        thresh = ctx.tol(5) * scale
        if q == 1:
            a = diag[0] + 2 * off[0]
            if abs(a) <= thresh:
                raise SingularSystem("pivot underflow", row=0)
            return [rhs[0] / a]
        if q == 2:
            a, d = diag
            b = off[0] + off[1]
            det = a * d - b * b
            if abs(det) <= thresh * scale:
                raise SingularSystem("pivot underflow", row=1)
            return [(d * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - b * rhs[0]) / det]
        # A = T + u v^T with the corners moved into the rank-one term
        corner = off[q - 1]
        gamma = -diag[0] if diag[0] != 0 else scale
        d2 = list(diag)
        d2[0] = diag[0] - gamma
        d2[-1] = diag[-1] - corner * corner / gamma
        sub = [mpfr(0)] + off[: q - 1]
        sup = off[: q - 1] + [mpfr(0)]
        y = _thomas(sub, d2, sup, rhs, thresh)
        u = [mpfr(0)] * q
        u[0] = gamma
        u[-1] = corner
        z = _thomas(sub, d2, sup, u, thresh)
        vy = y[0] + corner / gamma * y[-1]
        vz = z[0] + corner / gamma * z[-1]
        den = 1 + vz
        if abs(den) <= ctx.tol(5) * (1 + abs(vz)):
            raise SingularSystem("rank-one correction singular", row=q - 1)
        f = vy / den
        return [y[i] - f * z[i] for i in range(q)]


def solve_dense(A: Sequence[Sequence], b: Sequence, ctx: PrecisionContext) -> list:
    """Gaussian elimination with partial pivoting (small systems, oracle)."""
    n = len(b)
    with ctx.local():
        M = [[to_real(v) for v in row] + [to_real(b[i])] for i, row in enumerate(A)]
        scale = max((abs(v) for row in M for v in row[:n]), default=mpfr(0))
        if scale == 0:
            raise SingularSystem("zero matrix")
        thresh = ctx.tol(5) * scale
        for c in range(n):
            piv = max(range(c, n), key=lambda r: abs(M[r][c]))
            if abs(M[piv][c]) <= thresh:
                raise SingularSystem("pivot underflow", row=c)
            M[c], M[piv] = M[piv], M[c]
            pr = M[c]
            inv = 1 / pr[c]
            for r in range(c + 1, n):
                f = M[r][c] * inv
                if f:
                    row = M[r]
                    for j in range(c, n + 1):
                        row[j] -= f * pr[j]
        x = [mpfr(0)] * n
        for i in range(n - 1, -1, -1):
            s = M[i][n]
            for j in range(i + 1, n):
                s -= M[i][j] * x[j]
            x[i] = s / M[i][i]
        return x


# ----------------------------------------------------------------------------
# polynomial roots (Aberth-Ehrlich)


def _horner(a, z):
    p = a[-1]
    dp = mpc(0)
    for c in reversed(a[:-1]):
        dp = dp * z + p
        p = p * z + c
    return p, dp


def poly_eval(coeffs: Sequence, z):
    """Coefficients in ascending order."""
    p = coeffs[-1] * 0 + coeffs[-1]
    for c in reversed(coeffs[:-1]):
        p = p * z + c
    return p


def polynomial_roots(coeffs: Sequence, ctx: PrecisionContext, max_iter: int = 1000) -> list:
    """All complex roots of sum coeffs[k] z^k (ascending order).

    Simultaneous Aberth-Ehrlich iteration in Gauss-Seidel form; a root is
    frozen once its residual reaches the rounding level of the evaluation
    or its correction is negligible.
    """
    with ctx.local():
        c = [to_real(v) for v in coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        n = len(c) - 1
        if n < 1:
            raise ValueError("degree must be >= 1 with nonzero leading coefficient")
        lead = c[-1]
        a = [mpc(v / lead) for v in c]
        absa = [abs(v) for v in a]
        u = mpfr(2) ** (-ctx.bits)
        cmax = max(absa)
        # starting circle: geometric mean of root moduli, else a Fujiwara-type bound
        if absa[0] > 0:
            rad = absa[0] ** (mpfr(1) / n)
        else:
            rad = max((absa[k] ** (mpfr(1) / (n - k)) for k in range(n) if absa[k] > 0), default=mpfr(1))
        pi = gmpy2.const_pi()
        z = [mpc(rad * gmpy2.cos(2 * pi * k / n + mpfr("0.4")), rad * gmpy2.sin(2 * pi * k / n + mpfr("0.4")))
             for k in range(n)]
        done = [False] * n
        for _ in range(max_iter):
            active = False
            for i in range(n):
                if done[i]:
                    continue
                zi = z[i]
                p, dp = _horner(a, zi)
                az = abs(zi)
                bound = 4 * (n + 1) * u * (sum(absa[k] * az ** k for k in range(n + 1)) + cmax)
                if abs(p) <= bound:
                    done[i] = True
                    continue
                active = True
                s = mpc(0)
                for j in range(n):
                    if j != i:
                        d = zi - z[j]
                        if d != 0:
                            s += 1 / d
                if dp == 0:
                    w = p  # nudge off a critical point
                else:
                    ratio = p / dp
                    w = ratio / (1 - ratio * s)
                z[i] = zi - w
                if abs(w) <= 4 * u * abs(z[i]):
                    done[i] = True
            if not active:
                break
        else:
            raise NoConvergence("Aberth iteration limit", iterations=max_iter,
                                best=[str(v) for v in z])
        # residual bound, homogeneous in z (checks the reversed polynomial when |z| > 1)
        lim = mpfr(10) ** (-ctx.digits / 2) * max(abs(v) for v in c)
        cz = [mpc(v) for v in c]
        for zi in z:
            if abs(poly_eval(cz, zi)) > lim * max(mpfr(1), abs(zi)) ** n:
                raise NoConvergence("root residual above bound", root=str(zi))
        return z


def cluster_roots(roots: Sequence, tol) -> list[tuple]:
    """Group roots closer than tol; returns (centroid, multiplicity)."""
    groups: list[list] = []
    for r in roots:
        for g in groups:
            if any(abs(r - s) <= tol for s in g):
                g.append(r)
                break
        else:
            groups.append([r])
    return [(sum(g, mpc(0)) / len(g), len(g)) for g in groups]


def poly_from_roots(roots: Sequence, lead=1) -> list:
    """Ascending coefficients of lead * prod (z - r)."""
    c = [mpc(lead)]
    for r in roots:
        nxt = [mpc(0)] * (len(c) + 1)
        for k, v in enumerate(c):
            nxt[k + 1] += v
            nxt[k] -= r * v
        c = nxt
    return c


# ----------------------------------------------------------------------------
# fitting


def fit_distance(residuals: Sequence) -> mpfr:
    """Root of the residual sum of squares: the distance convention used in
    the published fit tables (see notes)."""
    return gmpy2.sqrt(sum((mpfr(r) ** 2 for r in residuals), mpfr(0)))


@dataclass
class FitResult:
    model: str
    params: dict
    mean_square_distance: mpfr
    mean_square: mpfr
    residuals: list = field(default_factory=list)
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def values(self) -> list:
        return list(self.params.values())

    def __getitem__(self, name):
        return self.params[name]


@dataclass
class LinearFit:
    slope: mpfr
    intercept: mpfr
    mean_square_distance: mpfr
    mean_square: mpfr
    residuals: list

    def __iter__(self):
        return iter((self.slope, self.intercept, self.mean_square_distance))


def linear_fit(xs: Sequence, ys: Sequence, ctx: PrecisionContext | None = None) -> LinearFit:
    ctx = ctx or PrecisionContext(40)
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("need >= 2 paired points")
    with ctx.local():
        x = [to_real(v) for v in xs]
        y = [to_real(v) for v in ys]
        n = len(x)
        mx = sum(x) / n
        my = sum(y) / n
        sxx = sum((v - mx) ** 2 for v in x)
        if sxx == 0:
            raise DegenerateAbscissae("all abscissae equal", x=str(x[0]))
        sxy = sum((x[i] - mx) * (y[i] - my) for i in range(n))
        slope = sxy / sxx
        icpt = my - slope * mx
        res = [y[i] - slope * x[i] - icpt for i in range(n)]
        return LinearFit(slope, icpt, fit_distance(res), sum(r * r for r in res) / n, res)


def fd_jacobian(f: Callable[[list], list], p: Sequence, h) -> list[list]:
    """Central-difference Jacobian, step h*max(1,|p_j|)."""
    p = list(p)
    cols = []
    for j in range(len(p)):
        hj = h * max(1, abs(p[j]))
        pp = list(p)
        pm = list(p)
        pp[j] += hj
        pm[j] -= hj
        fp, fm = f(pp), f(pm)
        cols.append([(fp[i] - fm[i]) / (2 * hj) for i in range(len(fp))])
    m = len(cols[0])
    return [[cols[j][i] for j in range(len(p))] for i in range(m)]


def levenberg_marquardt(model: Callable, init: Sequence, data, ctx: PrecisionContext | None = None,
                        names: Sequence[str] | None = None, lam0: float = 1e-3, max_iter: int = 500,
                        tol: float = 1e-12, h=None) -> FitResult:
    """Minimise sum of model(params, data)**2 (model returns residuals).

    Marquardt scaling of the damping, lambda x10 on rejection, /10 on
    acceptance. Stops on relative decrease or relative step below tol.
    """
    ctx = ctx or PrecisionContext(30)
    names = list(names) if names else [f"p{i}" for i in range(len(init))]
    with ctx.local():
        p = [to_real(v) for v in init]
        h = to_real(h) if h is not None else mpfr(10) ** (-ctx.digits / 3)
        tol = to_real(tol)
        f = lambda q: [to_real(r) for r in model(q, data)]
        r = f(p)
        S = sum(v * v for v in r)
        lam = to_real(lam0)
        for it in range(1, max_iter + 1):
            J = fd_jacobian(f, p, h)
            m, k = len(J), len(p)
            A = [[sum(J[i][a] * J[i][b] for i in range(m)) for b in range(k)] for a in range(k)]
            g = [sum(J[i][a] * r[i] for i in range(m)) for a in range(k)]
            while True:
                M = [[A[a][b] + (lam * (A[a][a] if A[a][a] != 0 else 1) if a == b else 0)
                      for b in range(k)] for a in range(k)]
                try:
                    step = solve_dense(M, [-v for v in g], ctx)
                except SingularSystem:
                    step = None
                if step is not None:
                    pn = [p[i] + step[i] for i in range(k)]
                    rn = f(pn)
                    Sn = sum(v * v for v in rn)
                    if Sn < S:
                        rel = (S - Sn) / S if S else mpfr(0)
                        snorm = gmpy2.sqrt(sum(s * s for s in step))
                        pnorm = gmpy2.sqrt(sum(v * v for v in pn))
                        p, r, S = pn, rn, Sn
                        lam /= 10
                        break
                lam *= 10
                if lam > 1e30:
                    return _lm_result(names, p, r, it)
            if rel < tol or snorm < tol * (1 + pnorm):
                return _lm_result(names, p, r, it)
        raise NoConvergence("Levenberg-Marquardt iteration limit", iterations=max_iter,
                            best={n: str(v) for n, v in zip(names, p)})


def _lm_result(names, p, r, it) -> FitResult:
    return FitResult("lm", dict(zip(names, p)), fit_distance(r),
                     sum(v * v for v in r) / len(r), list(r), it)
