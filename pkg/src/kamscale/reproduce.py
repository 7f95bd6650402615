"""Drivers that recompute the reference tables T1..T13 and figure data F1..F3.

Each driver writes <id>.csv (computed columns next to reference values and
relative deviations) into the output directory; figures also get a gnuplot
script. Rows beyond the budget tier are listed as skipped, and
BudgetExceeded is raised after the report is written (unless partial output
is allowed).
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path
from typing import Callable, Optional, Sequence

import gmpy2
from gmpy2 import mpfr

from . import reference as ref
from .cache import Cache, ResultStore, atomic_write
from .errors import BudgetExceeded, KamError
from .greene import ClassificationRules, critical_function, critical_residues
from .lindstedt import coefficients
from .numerics import PrecisionContext, fmt, to_real
from .pade import poles_csv, rho1, rho_pade
from .rotation import ContinuedFraction, bryuno, convergents_upto, parse_bracket, value
from .scaling import ScalingDataset, evaluate_fit, fit, interpolation_residual, running_slopes

TABLE_IDS = tuple(f"T{i}" for i in range(1, 14)) + ("F1", "F2", "F3")
RECOMPUTE_EPSILON = ("T8",)


@dataclass(frozen=True)
class Tier:
    name: str
    max_quotient: int          # largest partial quotient for which eps_c is recomputed
    crit_q_max: int            # convergent ceiling in the bisection
    target_digits: int
    schedule: tuple
    residue_q_max: int         # largest period in the residue tables
    pade_order: int
    pade_digits: int
    max_rho_n: int             # largest n for the Pade column


TIERS = {
    "desk": Tier("desk", 10, 5000, 4, (38, 76, 150), 5000, 80, 120, 50),
    "lab": Tier("lab", 500, 200000, 5, (38, 76, 150, 300, 600), 120000, 120, 160, 200),
    "paper": Tier("paper", 10 ** 9, 10 ** 7, 9, (38, 76, 150, 300, 600, 1200), 10 ** 7, 240, 320, 10 ** 9),
}


@dataclass
class ReproduceConfig:
    table_id: str
    tier: str = "desk"
    out_dir: Path = Path("reproduce_out")
    workers: int = 1
    cache_dir: Optional[Path] = None
    allow_partial: bool = False


@dataclass
class Report:
    table_id: str
    header: list
    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        w.writerows(self.rows)
        return buf.getvalue()


# ---------------------------------------------------------------- formatting

def dec(x, sig: int = 10) -> str:
    """Fixed-point decimal string with `sig` significant digits (no exponent)."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    d = Decimal(fmt(x, sig))
    return format(d, "f")


def rel_dev(x, r) -> str:
    if x is None or r in (None, ""):
        return ""
    with gmpy2.context(precision=200):
        rv = mpfr(str(r))
        if rv == 0:
            return ""
        return fmt((to_real(x) - rv) / rv, 3)


def _store(cache_dir) -> Optional[ResultStore]:
    return ResultStore(Cache(cache_dir)) if cache_dir is not None else None


def _map(fn: Callable, args: Sequence, workers: int) -> list:
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(fn, *a) for a in args]
        return [f.result() for f in futs]


# ---------------------------------------------------------------- row tasks (module level: picklable)

def task_critical(bracket: str, tier_name: str, cache_dir) -> dict:
    tier = TIERS[tier_name]
    cf = parse_bracket(bracket)
    rules = ClassificationRules(q_max=tier.crit_q_max, schedule=tier.schedule)
    try:
        est = critical_function(cf, tier.target_digits, rules=rules, store=_store(cache_dir))
        return {"value": str(est.value), "error": str(est.error), "status": "ok"}
    except KamError as exc:
        c = exc.to_dict()["context"]
        lo, hi = c.get("lo"), c.get("hi")
        if lo is not None and hi is not None:
            mid = (Decimal(lo) + Decimal(hi)) / 2
            return {"value": str(mid), "error": str((Decimal(hi) - Decimal(lo)) / 2), "status": exc.code}
        return {"value": None, "error": None, "status": exc.code}


def task_r_inf(bracket: str, eps: str, tier_name: str, cache_dir) -> dict:
    tier = TIERS[tier_name]
    cf = parse_bracket(bracket)
    ks = [c.k for c in convergents_upto(cf, tier.residue_q_max)]
    seq = critical_residues(cf, eps, ks[2:], tier.schedule, _store(cache_dir))
    last = seq.entries[-1]
    return {"value": fmt(last[1].value, 15), "q": last[0].q}


def task_rho_pade(bracket: str, tier_name: str) -> dict:
    tier = TIERS[tier_name]
    cf = parse_bracket(bracket)
    ctx = PrecisionContext(tier.pade_digits)
    try:
        est = rho_pade(cf, 1, tier.pade_order, ctx)
        return {"value": fmt(est.rho, 15), "status": "ok"}
    except KamError as exc:
        return {"value": None, "status": exc.code}


def task_poles(bracket: str, tier_name: str) -> str:
    tier = TIERS[tier_name]
    cf = parse_bracket(bracket)
    ctx = PrecisionContext(tier.pade_digits)
    est = rho_pade(cf, 1, tier.pade_order, ctx)
    return poles_csv(est.details["poles"])


# ---------------------------------------------------------------- drivers

def _eps_table(tid: str, cfg: ReproduceConfig) -> Report:
    T = ref.EPS_TABLES[tid]
    tier = TIERS[cfg.tier]
    ctx = PrecisionContext(40)
    rep = Report(tid, ["k", "omega", "B", "B_ref", "B_rel_dev", "eps_c", "eps_c_err", "eps_c_ref", "eps_c_rel_dev",
                       "A", "A_err", "A_ref", "A_err_ref"])
    brackets = [ref.family_bracket(T.template, n) for n in T.ns]
    todo = [i for i, n in enumerate(T.ns) if max(n, *parse_bracket(brackets[i]).head) <= tier.max_quotient]
    rep.skipped = [f"{tid} row {i + 1} {brackets[i]} (eps_c)" for i in range(len(T.ns)) if i not in todo]
    crit = dict(zip(todo, _map(task_critical, [(brackets[i], cfg.tier, cfg.cache_dir) for i in todo], cfg.workers)))
    # slopes from the printed eps_c and B(omega) at full precision (the printed
    # B carries 5 decimals, too few for 4-decimal slopes over short B steps)
    ds = ScalingDataset.from_omegas(brackets, T.eps_c, "eps_c", T.resonance, tid, ctx=ctx)
    slopes = running_slopes(ds, ctx)
    for i, b in enumerate(brackets):
        B = bryuno(parse_bracket(b), ctx).value
        c = crit.get(i, {})
        s = slopes[i - 1] if i else None
        sref = T.slopes[i - 1] if i else (None, None)
        rep.rows.append([i + 1, b, dec(B, 12), T.B[i], rel_dev(B, T.B[i]),
                         c.get("value") or "", c.get("error") or "", T.eps_c[i],
                         rel_dev(mpfr(c["value"]), T.eps_c[i]) if c.get("value") else "",
                         dec(s.value, 6) if s else "", dec(s.error, 2) if s else "", sref[0] or "", sref[1] or ""])
    return rep


def _t5(cfg: ReproduceConfig) -> Report:
    tier = TIERS[cfg.tier]
    rep = Report("T5", ["omega", "eps_c", "eps_c_err", "eps_c_ref", "eps_c_rel_dev", "R_inf", "R_inf_q", "R_inf_ref",
                        "R_inf_rel_dev"])
    rows = ref.T5
    crit = _map(task_critical, [(w, cfg.tier, cfg.cache_dir) for w, _, _ in rows], cfg.workers)
    rinf = _map(task_r_inf, [(w, e, cfg.tier, cfg.cache_dir) for w, e, _ in rows], cfg.workers)
    for (w, e, r), c, ri in zip(rows, crit, rinf):
        rep.rows.append([w, c["value"] or "", c["error"] or "", e,
                         rel_dev(mpfr(c["value"]), e) if c["value"] else "",
                         ri["value"], ri["q"], r, rel_dev(mpfr(ri["value"]), r)])
        if c["status"] != "ok":
            rep.skipped.append(f"T5 {w} eps_c stopped early ({c['status']}) at tier {tier.name}")
    return rep


def _residue_table(tid: str, cfg: ReproduceConfig) -> Report:
    T = ref.RESIDUE_TABLES[tid]
    tier = TIERS[cfg.tier]
    cf = parse_bracket(T.omega)
    eps = T.epsilon
    if tid in RECOMPUTE_EPSILON:
        # the printed epsilon gives decaying residues; bisect for eps_c first
        c = task_critical(T.omega, cfg.tier, cfg.cache_dir)
        eps = c["value"]
    want = {(p, q): r for p, q, r in T.rows}
    qmax = min(tier.residue_q_max, max(q for _, q, _ in T.rows))
    convs = convergents_upto(cf, qmax)
    ks = [c.k for c in convs if (c.p, c.q) in want]
    rep = Report(tid, ["p", "q", "epsilon", "residue", "residue_ref", "abs_dev"])
    got = {}
    if ks:
        seq = critical_residues(cf, eps, ks, tier.schedule, _store(cfg.cache_dir))
        got = {(c.p, c.q): r.value for c, r in seq.entries}
    for p, q, r in T.rows:
        if (p, q) in got:
            v = got[(p, q)]
            rep.rows.append([p, q, eps, dec(v, 8), r, fmt(v - mpfr(r), 3)])
        else:
            rep.rows.append([p, q, eps, "", r, ""])
            rep.skipped.append(f"{tid} {p}/{q}")
    return rep


def _rho_table(tid: str, cfg: ReproduceConfig) -> Report:
    T = ref.RHO_TABLES[tid]
    tier = TIERS[cfg.tier]
    ctx = PrecisionContext(40)
    brackets = [ref.family_bracket(T.template, n) for n in T.ns]
    cfs = [parse_bracket(b) for b in brackets]
    r1 = [rho1(c, ctx) for c in cfs]
    ds = ScalingDataset.from_omegas(cfs, [dec(r.rho, 30) for r in r1], "rho", T.resonance, tid, ctx=ctx)
    slopes = running_slopes(ds, ctx)
    header = ["k", "omega", "eta", "eta_ref", "rho1", "rho1_ref", "rho1_rel_dev", "A1", "A1_ref"]
    pade_vals = {}
    if T.rho_pade is not None:
        header += ["rho_pade", "rho_pade_ref", "rho_pade_rel_dev", "A_pade", "A_pade_ref"]
        todo = [i for i, n in enumerate(T.ns) if n <= tier.max_rho_n]
        res = _map(task_rho_pade, [(brackets[i], cfg.tier) for i in todo], cfg.workers)
        pade_vals = {i: r["value"] for i, r in zip(todo, res) if r["value"]}
        rep_skip = [f"{tid} row {i + 1} {brackets[i]} (rho_pade)" for i in range(len(T.ns)) if i not in pade_vals]
    else:
        rep_skip = []
    rep = Report(tid, header, skipped=rep_skip)
    for i, (b, r) in enumerate(zip(brackets, r1)):
        s = dec(slopes[i - 1].value, 8) if i else ""
        row = [i + 1, b, dec(r.details["eta"], 8), T.eta[i] if T.eta else "", dec(r.rho, 9), T.rho[i],
               rel_dev(r.rho, T.rho[i]), s, T.slopes[i - 1][0] if i else ""]
        if T.rho_pade is not None:
            pv = pade_vals.get(i)
            pslope = ""
            if i and pv and pade_vals.get(i - 1):
                with ctx.local():
                    pslope = dec(-(gmpy2.log(mpfr(pv)) - gmpy2.log(mpfr(pade_vals[i - 1]))) /
                                 (ds.rows[i].B - ds.rows[i - 1].B), 6)
            row += [dec(mpfr(pv), 6) if pv else "", T.rho_pade[i], rel_dev(mpfr(pv), T.rho_pade[i]) if pv else "",
                    pslope, T.slopes_pade[i - 1] if i else ""]
        rep.rows.append(row)
    return rep


GNUPLOT_F1 = """set terminal pngcairo size 900,900
set output '{png}'
set datafile separator ','
set size square
set xlabel 'Re eps'
set ylabel 'Im eps'
plot '{csv}' using 1:($4==0?$2:1/0) with points pt 7 ps 0.5 title 'poles', \\
     '{csv}' using 1:($4==1?$2:1/0) with points pt 6 ps 0.7 title 'doublets'
"""

GNUPLOT_XY = """set terminal pngcairo size 900,600
set output '{png}'
set datafile separator ','
set xlabel '{xl}'
set ylabel '{yl}'
plot '{data}' using {u} with points pt 7 title 'data'{extra}
"""


def _f1(cfg: ReproduceConfig) -> Report:
    rep = Report("F1", ["n", "omega", "csv", "poles", "doublets"])
    ns = (20, 50, 100, 200)
    brackets = [f"[3,{n},(1)]" for n in ns]
    out = _map(task_poles, [(b, cfg.tier) for b in brackets], cfg.workers)
    for n, b, text in zip(ns, brackets, out):
        name = f"F1_n{n}.csv"
        atomic_write(cfg.out_dir / name, text)
        gp = f"F1_n{n}.gp"
        atomic_write(cfg.out_dir / gp, GNUPLOT_F1.format(png=f"F1_n{n}.png", csv=name))
        rows = text.strip().splitlines()[1:]
        rep.rows.append([n, b, name, len(rows), sum(r.endswith(",1") for r in rows)])
        rep.files += [name, gp]
    return rep


def _f2(cfg: ReproduceConfig) -> Report:
    rep = Report("F2", ["family", "const", "beta", "amplitude", "exponent", "distance"])
    ctx = PrecisionContext(40)
    for tid in ("T1", "T3", "T4"):
        T = ref.EPS_TABLES[tid]
        ds = ScalingDataset.from_omegas([ref.family_bracket(T.template, n) for n in T.ns], T.eps_c, "eps_c",
                                        T.resonance, tid, ctx=ctx, B=T.B)
        f = fit(ds, "exp_correction", ctx)
        lf = fit(ds, "linear", ctx)
        data = ["B,minus_log_eps"] + [f"{dec(r.B, 8)},{dec(y, 10)}" for r, y in zip(ds.rows, ds.ys(ctx))]
        lo, hi = ds.rows[0].B, ds.rows[-1].B
        curve = ["B,exp_fit,linear_fit"]
        for j in range(101):
            b = lo + (hi - lo) * j / 100
            curve.append(f"{dec(b, 8)},{dec(evaluate_fit(f, b), 10)},{dec(evaluate_fit(lf, b), 10)}")
        dn, cn, gp = f"F2_{tid}_data.csv", f"F2_{tid}_fit.csv", f"F2_{tid}.gp"
        atomic_write(cfg.out_dir / dn, "\n".join(data) + "\n")
        atomic_write(cfg.out_dir / cn, "\n".join(curve) + "\n")
        atomic_write(cfg.out_dir / gp, GNUPLOT_XY.format(
            png=f"F2_{tid}.png", xl="B(omega)", yl="-log eps_c", data=dn, u="1:2",
            extra=f", '{cn}' using 1:2 with lines title 'exp fit', '{cn}' using 1:3 with lines dt 2 title 'linear'"))
        rep.rows.append([tid] + [dec(f[k], 8) for k in ("const", "beta", "amplitude", "exponent")] +
                        [dec(f.mean_square_distance, 4)])
        rep.files += [dn, cn, gp]
    return rep


def _f3(cfg: ReproduceConfig) -> Report:
    rep = Report("F3", ["panel", "family", "rows"])
    ctx = PrecisionContext(40)
    pairs = (("a", "T11", "rho", 2), ("b", "T1", "eps_c", 1), ("c", "T12", "rho", 2), ("d", "T3", "eps_c", 1),
             ("e", "T13", "rho", 2), ("f", "T4", "eps_c", 1))
    for panel, tid, kind, beta in pairs:
        if kind == "rho":
            T = ref.RHO_TABLES[tid]
            cfs = [parse_bracket(ref.family_bracket(T.template, n)) for n in T.ns]
            ds = ScalingDataset.from_omegas(cfs, [dec(rho1(c, ctx).rho, 30) for c in cfs], kind, T.resonance, tid,
                                            ctx=ctx)
        else:
            T = ref.EPS_TABLES[tid]
            ds = ScalingDataset.from_omegas([ref.family_bracket(T.template, n) for n in T.ns], T.eps_c, kind,
                                            T.resonance, tid, ctx=ctx)
        res = interpolation_residual(ds, beta, ctx)
        lines = ["omega,C"] + [f"{dec(value(w, ctx), 12)},{dec(c, 10)}" for w, c in res]
        dn, gp = f"F3{panel}.csv", f"F3{panel}.gp"
        atomic_write(cfg.out_dir / dn, "\n".join(lines) + "\n")
        atomic_write(cfg.out_dir / gp, GNUPLOT_XY.format(png=f"F3{panel}.png", xl="omega",
                                                         yl="C_rho" if kind == "rho" else "C", data=dn,
                                                         u="1:2", extra=""))
        rep.rows.append([panel, tid, len(res)])
        rep.files += [dn, gp]
    return rep


def reproduce(cfg: ReproduceConfig) -> Report:
    tid = cfg.table_id.upper()
    if tid not in TABLE_IDS:
        raise ValueError(f"unknown table id {cfg.table_id}; expected one of {', '.join(TABLE_IDS)}")
    if cfg.tier not in TIERS:
        raise ValueError(f"unknown tier {cfg.tier}")
    cfg = replace(cfg, table_id=tid, out_dir=Path(cfg.out_dir))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if tid in ref.EPS_TABLES:
        rep = _eps_table(tid, cfg)
    elif tid == "T5":
        rep = _t5(cfg)
    elif tid in ref.RESIDUE_TABLES:
        rep = _residue_table(tid, cfg)
    elif tid in ref.RHO_TABLES:
        rep = _rho_table(tid, cfg)
    else:
        rep = {"F1": _f1, "F2": _f2, "F3": _f3}[tid](cfg)
    name = f"{tid}.csv"
    atomic_write(cfg.out_dir / name, rep.csv())
    rep.files.insert(0, name)
    if rep.skipped:
        atomic_write(cfg.out_dir / f"{tid}.skipped.txt", "\n".join(rep.skipped) + "\n")
        if not cfg.allow_partial:
            raise BudgetExceeded("rows skipped at this budget tier", table=tid, tier=cfg.tier, skipped=rep.skipped,
                                 out_dir=str(cfg.out_dir))
    return rep
