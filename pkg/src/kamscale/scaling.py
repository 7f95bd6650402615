"""Scaling of eps_c and rho against the Bryuno function.

Everything is done on y = -log v versus B. Running slopes are finite
differences of y; fits are y = const + beta B + correction. Fit distances
follow the convention sqrt(sum r^2) (`mean_square_distance`); the plain mean
of r^2 is kept as `mean_square`.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Optional, Sequence

import gmpy2
from gmpy2 import mpfr

from .errors import DegenerateAbscissae, DuplicateB, NoConvergence, ParseError
from .numerics import (FitResult, PrecisionContext, fit_distance, fmt, levenberg_marquardt, linear_fit,
                       to_real)
from .rotation import ContinuedFraction, bryuno, format_bracket, parse_bracket

KINDS = ("eps_c", "rho")
DEFAULT_CTX = PrecisionContext(40)


def last_digit_unit(text: str) -> Decimal:
    """One unit in the last printed digit of a decimal string."""
    d = Decimal(text.strip())
    return Decimal(1).scaleb(d.as_tuple().exponent)


@dataclass
class ScalingRow:
    omega: Optional[ContinuedFraction]
    B: mpfr
    value: str  # decimal string as printed/computed
    uncertainty: Optional[Decimal] = None

    def __post_init__(self):
        if self.uncertainty is None:
            self.uncertainty = last_digit_unit(self.value)


@dataclass
class ScalingDataset:
    rows: list
    kind: str = "eps_c"
    resonance: Optional[tuple] = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")

    @classmethod
    def from_omegas(cls, omegas: Sequence, values: Sequence[str], kind: str = "eps_c",
                    resonance=None, name: str = "", ctx: PrecisionContext = DEFAULT_CTX,
                    B: Optional[Sequence] = None) -> "ScalingDataset":
        """B is computed from omega unless given explicitly (e.g. printed columns)."""
        rows = []
        for i, (w, v) in enumerate(zip(omegas, values)):
            cf = parse_bracket(w) if isinstance(w, str) else w
            b = to_real(B[i]) if B is not None else bryuno(cf, ctx).value
            rows.append(ScalingRow(cf, b, str(v)))
        return cls(rows, kind, resonance, name)

    @property
    def Bs(self) -> list:
        return [r.B for r in self.rows]

    def ys(self, ctx: PrecisionContext = DEFAULT_CTX) -> list:
        with ctx.local():
            return [-gmpy2.log(mpfr(r.value)) for r in self.rows]

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omega", "B", "value", "kind"])
        for r in self.rows:
            w.writerow([format_bracket(r.omega) if r.omega is not None else "", fmt(r.B, 12), r.value, self.kind])
        return buf.getvalue()


_ROW = re.compile(r'^\s*"?(\[[^\]]*\])"?\s*,\s*([^,\s]+)')


def read_dataset(text: str, kind: str = "eps_c", ctx: PrecisionContext = DEFAULT_CTX, name: str = "") -> ScalingDataset:
    """CSV with columns (omega, value); header optional; B recomputed."""
    omegas, values = [], []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line_no == 1 and line.lstrip().lower().startswith("omega"):
            continue
        # brackets contain commas, so split after the closing bracket
        m = _ROW.match(line)
        if m is None:
            raise ParseError("expected two columns (omega, value)", line=line_no)
        w, v = m.group(1), m.group(2)
        try:
            Decimal(v)
        except Exception as exc:
            raise ParseError("value is not a decimal", line=line_no, value=v) from exc
        omegas.append(parse_bracket(w))
        values.append(v)
    return ScalingDataset.from_omegas(omegas, values, kind, name=name, ctx=ctx)


@dataclass
class Slope:
    value: mpfr
    error: mpfr
    lo: mpfr
    hi: mpfr

    def __float__(self):
        return float(self.value)


def pair_slope(B1, v1, B2, v2) -> mpfr:
    """A = -(log v2 - log v1) / (B2 - B1)."""
    return -(gmpy2.log(v2) - gmpy2.log(v1)) / (B2 - B1)


def running_slopes(ds: ScalingDataset, ctx: PrecisionContext = DEFAULT_CTX) -> list:
    """Consecutive-pair slopes A_k (k = 2..n) with interval error bars from
    +-1 unit in the last digit of both values."""
    if len(ds.rows) < 2:
        raise ValueError("need >= 2 rows")
    out = []
    with ctx.local():
        for a, b in zip(ds.rows, ds.rows[1:]):
            if a.B == b.B:
                raise DuplicateB("consecutive rows share the same B", B=fmt(a.B, 15))
            v1, v2 = mpfr(a.value), mpfr(b.value)
            u1, u2 = mpfr(str(a.uncertainty)), mpfr(str(b.uncertainty))
            A = pair_slope(a.B, v1, b.B, v2)
            corners = [pair_slope(a.B, v1 + s1 * u1, b.B, v2 + s2 * u2)
                       for s1 in (-1, 1) for s2 in (-1, 1) if v1 + s1 * u1 > 0 and v2 + s2 * u2 > 0]
            lo, hi = min(corners), max(corners)
            out.append(Slope(A, max(hi - A, A - lo), lo, hi))
    return out


def interpolation_residual(ds: ScalingDataset, beta, ctx: PrecisionContext = DEFAULT_CTX) -> list:
    """(omega, log v + beta B) per row."""
    with ctx.local():
        b = to_real(beta)
        if b <= 0:
            raise ValueError("beta must be > 0")
        return [(r.omega, gmpy2.log(mpfr(r.value)) + b * r.B) for r in ds.rows]


# ---------------------------------------------------------------- fits

def _lstsq(columns: Sequence[Sequence], y: Sequence, ctx: PrecisionContext) -> tuple:
    """Least squares by modified Gram-Schmidt; returns (coeffs, residuals)."""
    with ctx.local():
        n, m = len(y), len(columns)
        if n < m:
            raise DegenerateAbscissae("fewer points than parameters", points=n, params=m)
        Q = [[to_real(v) for v in col] for col in columns]
        R = [[mpfr(0)] * m for _ in range(m)]
        for j in range(m):
            for i in range(j):
                R[i][j] = sum(Q[i][t] * Q[j][t] for t in range(n))
                Q[j] = [Q[j][t] - R[i][j] * Q[i][t] for t in range(n)]
            nrm = gmpy2.sqrt(sum(v * v for v in Q[j]))
            ref = gmpy2.sqrt(sum(to_real(v) ** 2 for v in columns[j])) or mpfr(1)
            if nrm <= ref * mpfr(10) ** (-ctx.digits + 5):
                raise DegenerateAbscissae("design matrix rank deficient", column=j)
            R[j][j] = nrm
            Q[j] = [v / nrm for v in Q[j]]
        yy = [to_real(v) for v in y]
        qty = [sum(Q[j][t] * yy[t] for t in range(n)) for j in range(m)]
        c = [mpfr(0)] * m
        for j in reversed(range(m)):
            c[j] = (qty[j] - sum(R[j][k] * c[k] for k in range(j + 1, m))) / R[j][j]
        res = [yy[t] - sum(c[j] * to_real(columns[j][t]) for j in range(m)) for t in range(n)]
        return c, res


def _result(model: str, names, coeffs, res, **extra) -> FitResult:
    return FitResult(model, dict(zip(names, coeffs)), fit_distance(res),
                     sum(v * v for v in res) / len(res), list(res), 0, dict(extra))


@dataclass(frozen=True)
class ExpFitConfig:
    a_step: str = "0.05"
    a_max: str = "3"
    refine: int = 10
    polish: bool = True
    disagreement: str = "0.01"


def _exp_linear(B, y, a, ctx):
    with ctx.local():
        a = to_real(a)
        cols = [[mpfr(1)] * len(B), B, [gmpy2.exp(-a * b) for b in B]]
        return _lstsq(cols, y, ctx)


def exp_correction_fit(B: Sequence, y: Sequence, ctx: PrecisionContext = DEFAULT_CTX,
                       config: ExpFitConfig = ExpFitConfig(), amplitude_zero: bool = False) -> FitResult:
    """y = const + beta B + amplitude exp(-exponent B).

    Grid over the exponent (linear least squares at each node), refined
    around the best node, then a Levenberg-Marquardt polish on all four
    parameters. Both answers are kept; `disagree` is set if beta or the
    exponent differ by more than config.disagreement (relative).
    """
    names = ("const", "beta", "amplitude", "exponent")
    with ctx.local():
        B = [to_real(b) for b in B]
        y = [to_real(v) for v in y]
        if len(B) < 5:
            raise DegenerateAbscissae("exp_correction needs >= 5 rows", rows=len(B))
        if amplitude_zero:
            lf = linear_fit(B, y, ctx)
            return _result("exp_correction", names, [lf.intercept, lf.slope, mpfr(0), mpfr(0)], lf.residuals,
                           amplitude_zero=True)
        step = mpfr(config.a_step)
        nodes = [step * k for k in range(1, int(mpfr(config.a_max) / step) + 1)]

        def score(a):
            c, r = _exp_linear(B, y, a, ctx)
            return sum(v * v for v in r), c, r

        best = min(((score(a), a) for a in nodes), key=lambda t: t[0][0])
        for _ in range(2):  # two refinement passes
            a0 = best[1]
            step = step / config.refine
            fine = [a0 + step * k for k in range(-config.refine, config.refine + 1) if a0 + step * k > 0]
            best = min(((score(a), a) for a in fine), key=lambda t: t[0][0])
        (_, c, r), a = best
        grid = _result("exp_correction", names, list(c) + [a], r)
        out = grid
        extra = {"grid": grid, "lm": None, "disagree": False}
        if config.polish:
            def model(p, _):
                return [y[t] - (p[0] + p[1] * B[t] + p[2] * gmpy2.exp(-p[3] * B[t])) for t in range(len(B))]
            try:
                lm = levenberg_marquardt(model, list(c) + [a], None, ctx, names, tol=mpfr(10) ** (-ctx.digits // 2))
                lm.model = "exp_correction"
                extra["lm"] = lm
                tol = mpfr(config.disagreement)
                extra["disagree"] = bool(abs(lm["beta"] - grid["beta"]) > tol * abs(grid["beta"]) or
                                         abs(lm["exponent"] - grid["exponent"]) > tol * abs(grid["exponent"]))
                if lm.mean_square_distance <= grid.mean_square_distance and lm["exponent"] > 0:
                    out = lm
            except NoConvergence as exc:
                extra["lm_error"] = exc.to_dict()
        out = FitResult("exp_correction", dict(out.params), out.mean_square_distance, out.mean_square,
                        list(out.residuals), out.iterations, extra)
        return out


def b_plus_cB_fit(B: Sequence, y: Sequence, q: int = 3, reading: str = "exp", fix: Optional[str] = None,
                  ctx: PrecisionContext = DEFAULT_CTX) -> FitResult:
    """y = const + beta B + correction with correction
         reading="exp":   (b + c B) exp(-q B)     (linear least squares)
         reading="power": (b + c B)^(-q B)        (Levenberg-Marquardt)
    fix="b" or "c" pins that coefficient to zero."""
    if reading not in ("exp", "power"):
        raise ValueError("reading must be 'exp' or 'power'")
    with ctx.local():
        B = [to_real(b) for b in B]
        y = [to_real(v) for v in y]
        if reading == "exp":
            e = [gmpy2.exp(-q * b) for b in B]
            cols = [[mpfr(1)] * len(B), B]
            names = ["const", "beta"]
            if fix != "b":
                cols.append(e)
                names.append("b")
            if fix != "c":
                cols.append([b * v for b, v in zip(B, e)])
                names.append("c")
            coeffs, res = _lstsq(cols, y, ctx)
            p = dict(zip(names, coeffs))
            p.setdefault("b", mpfr(0))
            p.setdefault("c", mpfr(0))
            r = _result("b_plus_cB_correction", list(p), list(p.values()), res, reading=reading, q=q, fix=fix)
            return r
        # power reading: needs b + c B > 0 on the data
        lf = linear_fit(B, y, ctx)
        names = ["const", "beta", "b", "c"]

        def corr(p, b):
            base = (p[2] if fix != "b" else 0) + (p[3] if fix != "c" else 0) * b
            if base <= 0:
                return mpfr("inf")
            return base ** (-q * b)

        def model(p, _):
            return [y[t] - (p[0] + p[1] * B[t] + corr(p, B[t])) for t in range(len(B))]

        init = [lf.intercept, lf.slope, mpfr(2) if fix != "b" else mpfr(0), mpfr(1) if fix != "c" else mpfr(0)]
        lm = levenberg_marquardt(model, init, None, ctx, names, tol=mpfr(10) ** (-ctx.digits // 2))
        return FitResult("b_plus_cB_correction", lm.params, lm.mean_square_distance, lm.mean_square,
                         lm.residuals, lm.iterations, {"reading": reading, "q": q, "fix": fix})


def exp_B_fit(B: Sequence, y: Sequence, ctx: PrecisionContext = DEFAULT_CTX) -> FitResult:
    """y = const + beta B + c exp(-B)  (the 0/1 family of radii)."""
    with ctx.local():
        B = [to_real(b) for b in B]
        coeffs, res = _lstsq([[mpfr(1)] * len(B), B, [gmpy2.exp(-b) for b in B]], y, ctx)
        return _result("exp_B_correction", ["const", "beta", "c"], coeffs, res)


MODELS = ("linear", "exp_correction", "b_plus_cB_correction", "exp_B_correction")


def fit(ds: ScalingDataset, model: str = "linear", ctx: PrecisionContext = DEFAULT_CTX, **opts) -> FitResult:
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    B, y = ds.Bs, ds.ys(ctx)
    nparams = {"linear": 2, "exp_correction": 4, "b_plus_cB_correction": 4, "exp_B_correction": 3}[model]
    if len(B) < nparams + 1:
        raise DegenerateAbscissae("not enough rows for the model", rows=len(B), params=nparams)
    if model == "linear":
        lf = linear_fit(B, y, ctx)
        return FitResult("linear", {"const": lf.intercept, "beta": lf.slope}, lf.mean_square_distance,
                         lf.mean_square, lf.residuals)
    if model == "exp_correction":
        return exp_correction_fit(B, y, ctx, opts.get("config", ExpFitConfig()), opts.get("amplitude_zero", False))
    if model == "b_plus_cB_correction":
        q = opts.get("q") or (ds.resonance[1] if ds.resonance else 3)
        return b_plus_cB_fit(B, y, q, opts.get("reading", "exp"), opts.get("fix"), ctx)
    return exp_B_fit(B, y, ctx)


def evaluate_fit(f: FitResult, B) -> mpfr:
    """Model value of y at B."""
    p = f.params
    b = to_real(B)
    y = p["const"] + p["beta"] * b
    if f.model == "exp_correction":
        y += p["amplitude"] * gmpy2.exp(-p["exponent"] * b)
    elif f.model == "exp_B_correction":
        y += p["c"] * gmpy2.exp(-b)
    elif f.model == "b_plus_cB_correction":
        q = f.extra.get("q", 3)
        base = p["b"] + p["c"] * b
        y += base * gmpy2.exp(-q * b) if f.extra.get("reading", "exp") == "exp" else base ** (-q * b)
    return y


# ---------------------------------------------------------------- report

def _corrected_model(ds: ScalingDataset) -> tuple:
    if ds.kind == "eps_c":
        return "exp_correction", {}
    if ds.resonance is None or ds.resonance[1] == 1:
        return "exp_B_correction", {}
    return "b_plus_cB_correction", {"q": ds.resonance[1]}


@dataclass
class FamilyReport:
    name: str
    kind: str
    linear: Optional[FitResult]
    corrected: Optional[FitResult]
    slopes: list
    slope_trend: str
    residuals: list
    notes: list = field(default_factory=list)


def _trend(slopes: Sequence) -> str:
    if len(slopes) < 2:
        return "insufficient data"
    d = [b.value - a.value for a, b in zip(slopes, slopes[1:])]
    if all(x > 0 for x in d):
        return "increasing"
    if all(x < 0 for x in d):
        return "decreasing"
    return "non-monotone"


def beta_report(families: Sequence[ScalingDataset], ctx: PrecisionContext = DEFAULT_CTX) -> list:
    if not families:
        raise ValueError("need >= 1 family")
    out = []
    for ds in families:
        notes = []
        beta0 = 1 if ds.kind == "eps_c" else 2
        slopes = running_slopes(ds, ctx) if len(ds.rows) >= 2 else []
        lin = cor = None
        if len(ds.rows) >= 3:
            lin = fit(ds, "linear", ctx)
        else:
            notes.append("insufficient data for a linear fit")
        model, opts = _corrected_model(ds)
        try:
            cor = fit(ds, model, ctx, **opts)
        except DegenerateAbscissae:
            notes.append(f"insufficient data for {model}")
        if cor is not None and cor.extra.get("disagree"):
            notes.append("grid and Levenberg-Marquardt fits disagree by more than 1%")
        trend = _trend(slopes)
        if trend == "insufficient data":
            notes.append("slope trend: insufficient data")
        res = interpolation_residual(ds, beta0, ctx)
        out.append(FamilyReport(ds.name, ds.kind, lin, cor, slopes, trend, res, notes))
    return out


def report_csv(reports: Sequence[FamilyReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "kind", "linear_beta", "linear_distance", "model", "corrected_beta",
                "corrected_distance", "slope_trend"])
    for r in reports:
        w.writerow([r.name, r.kind,
                    fmt(r.linear["beta"], 10) if r.linear else "", fmt(r.linear.mean_square_distance, 6) if r.linear else "",
                    r.corrected.model if r.corrected else "",
                    fmt(r.corrected["beta"], 10) if r.corrected else "",
                    fmt(r.corrected.mean_square_distance, 6) if r.corrected else "", r.slope_trend])
    return buf.getvalue()


def report_text(reports: Sequence[FamilyReport]) -> str:
    lines = []
    for r in reports:
        lines.append(f"family {r.name or '?'} ({r.kind})")
        if r.linear:
            lines.append(f"  linear     beta = {fmt(r.linear['beta'], 8)}  d = {fmt(r.linear.mean_square_distance, 4)}")
        if r.corrected:
            ps = "  ".join(f"{k}={fmt(v, 8)}" for k, v in r.corrected.params.items())
            lines.append(f"  {r.corrected.model}: {ps}  d = {fmt(r.corrected.mean_square_distance, 4)}")
        if r.slopes:
            lines.append("  slopes: " + " ".join(f"{fmt(s.value, 6)}+-{fmt(s.error, 1)}" for s in r.slopes))
        lines.append(f"  slope trend: {r.slope_trend}")
        lines.append("  C: " + " ".join(fmt(c, 6) for _, c in r.residuals))
        for n in r.notes:
            lines.append(f"  note: {n}")
    return "\n".join(lines) + "\n"
