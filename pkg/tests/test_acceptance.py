"""Acceptance criteria 1..10, one PASS/FAIL line each.

Each criterion records its sub-results through `record`; the terminal summary
(see conftest) prints the verdict per criterion. Rows known to disagree with
the reference tables are split into strict xfail tests so the run stays green
while the criterion line still reads FAIL.
"""

import json
import os
from decimal import Decimal

import gmpy2
import pytest
from gmpy2 import mpfr

from kamscale import reference as ref
from kamscale.cache import Cache, ResultStore
from kamscale.dynamics import MapParams, PhasePoint, det2, tangent
from kamscale.errors import Inconclusive
from kamscale.greene import ClassificationRules, critical_function, critical_residues
from kamscale.lindstedt import coefficients, first_order, functional_residual
from kamscale.numerics import PrecisionContext
from kamscale.orbits import find_orbit, lagrangian_residual, residue_at
from kamscale.pade import pade, rho1, rho_pade
from kamscale.rotation import bryuno, convergents, convergents_upto, parse_bracket, value
from kamscale.scaling import ScalingDataset, fit, running_slopes

pytestmark = pytest.mark.acceptance

RESULTS: dict = {}
CTX = PrecisionContext(40)


def record(cid: str, ok: bool, detail: str = "") -> bool:
    RESULTS.setdefault(cid, []).append((bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'} {cid} {detail}")
    return ok


def skip(cid: str, why: str):
    RESULTS.setdefault(cid, []).append((None, why))
    pytest.skip(why)


def rounds_to(x, printed: str) -> bool:
    places = len(printed.split(".")[1]) if "." in printed else 0
    return f"{float(x):.{places}f}" == printed


def sig_match(x, printed: str) -> bool:
    """x rounded to the significant digits printed."""
    d = Decimal(printed)
    q = Decimal(1).scaleb(d.adjusted() - len(d.as_tuple().digits) + 1)
    return Decimal(str(x)).quantize(q) == d


# ---------------------------------------------------------------- criterion 1

B_KNOWN_BAD = {("T1", 8)}


def _b_rows():
    for tid in ("T1", "T3", "T4"):
        T = ref.EPS_TABLES[tid]
        for i, n in enumerate(T.ns, 1):
            yield tid, i, ref.family_bracket(T.template, n), T.B[i - 1]


def test_c1_bryuno_values():
    import time

    t0 = time.perf_counter()
    bad = []
    for tid, i, b, printed in _b_rows():
        if (tid, i) in B_KNOWN_BAD:
            continue
        B = bryuno(parse_bracket(b), CTX).value
        if not rounds_to(B, printed):
            bad.append(f"{tid} row {i}")
    dt = time.perf_counter() - t0
    record("C1", not bad and dt < 1, f"{36 - len(B_KNOWN_BAD) - len(bad)} rows at printed decimals, {dt:.2f}s")
    assert not bad and dt < 1


@pytest.mark.xfail(strict=True, reason="B([12000,1^inf]) = 9.3928184; the table prints 9.39284")
def test_c1_table1_row8():
    B = bryuno(parse_bracket("[12000,(1)]"), CTX).value
    ok = rounds_to(B, ref.T1.B[7])
    record("C1", ok, f"T1 row 8 B = {float(B):.7f} vs printed {ref.T1.B[7]}")
    assert ok


# ---------------------------------------------------------------- criterion 2

@pytest.mark.parametrize("bracket,printed,tol", [("[(1)]", "0.971635406", "5e-4"), ("[(2)]", "0.957445408", "1e-3"),
                                                 ("[(3)]", "0.890863502", "1e-3")])
def test_c2_critical_function(bracket, printed, tol):
    rules = ClassificationRules(q_max=5000, schedule=(38, 76, 150))
    try:
        est = critical_function(parse_bracket(bracket), 4, rules=rules)
        val, status = est.value, "converged"
    except Inconclusive as exc:
        # the bracket at the convergent ceiling is still an estimate
        val = (Decimal(exc.context["lo"]) + Decimal(exc.context["hi"])) / 2
        status = "inconclusive bracket midpoint"
    dev = abs(val - Decimal(printed))
    ok = dev <= Decimal(tol)
    record("C2", ok, f"eps_c{bracket} = {val} ({status}, ref {printed}, dev {dev:.1e})")
    assert ok


# ---------------------------------------------------------------- criterion 3

def test_c3_critical_residues():
    T = ref.T6
    cf = parse_bracket(T.omega)
    want = {(p, q): r for p, q, r in T.rows if 4 <= q <= 780}
    ks = [c.k for c in convergents_upto(cf, 780) if (c.p, c.q) in want]
    seq = critical_residues(cf, T.epsilon, ks)
    got = {(c.p, c.q): r.value for c, r in seq.entries}
    devs = [abs(got[k] - mpfr(v)) for k, v in want.items()]
    vals = [got[k] for k in sorted(want, key=lambda pq: pq[1])]
    # period 2: small and large residues alternate
    alternates = all((a < b) != (b < c) for a, b, c in zip(vals, vals[1:], vals[2:]))
    ok = len(got) == len(want) and max(devs) < 2e-3 and alternates
    record("C3", ok, f"{len(want)} approximants, max dev {float(max(devs)):.1e}, "
                     f"last pair {float(vals[-2]):.4f}/{float(vals[-1]):.4f}")
    assert ok


# ---------------------------------------------------------------- criterion 4

def test_c4_constant_type_universality():
    est = {}
    for w, eps, _ in ref.T5:
        if w not in ("[(2)]", "[10,(2)]", "[1,3,(2)]"):
            continue
        cf = parse_bracket(w)
        ks = [c.k for c in convergents_upto(cf, 5000)]
        seq = critical_residues(cf, eps, ks[-3:])
        est[w] = seq.values()[-1]
    vals = list(est.values())
    spread = max(vals) - min(vals)
    ok = spread < 1e-3
    record("C4", ok, "R_inf " + ", ".join(f"{w} {float(v):.6f}" for w, v in est.items())
           + f" (spread {float(spread):.1e})")
    assert ok


# ---------------------------------------------------------------- criterion 5

@pytest.mark.slow
@pytest.mark.parametrize("bracket,printed", [("[2,500,(1)]", "0.12872"), ("[3,500,(1)]", "0.244787")])
def test_c5_near_resonance(bracket, printed):
    if os.environ.get("KAM_LAB") != "1":
        skip("C5", f"lab tier only (set KAM_LAB=1): eps_c{bracket}")
    from kamscale.reproduce import task_critical

    c = task_critical(bracket, "lab", None)
    rel = abs(Decimal(c["value"]) / Decimal(printed) - 1)
    ok = rel < Decimal("0.01")
    record("C5", ok, f"eps_c{bracket} = {c['value']} ({c['status']}), rel dev {rel:.1e}")
    assert ok


# ---------------------------------------------------------------- criterion 6

RHO1_KNOWN_BAD = {("T10", 1), ("T13", 5)}


def _rho1_rows():
    for tid, T in ref.RHO_TABLES.items():
        for i, n in enumerate(T.ns, 1):
            yield tid, i, ref.family_bracket(T.template, n), T.rho[i - 1]


def test_c6_rho1_values():
    import time

    t0 = time.perf_counter()
    bad, n = [], 0
    for tid, i, b, printed in _rho1_rows():
        if (tid, i) in RHO1_KNOWN_BAD:
            continue
        n += 1
        if not sig_match(rho1(parse_bracket(b), CTX).rho, printed):
            bad.append(f"{tid} row {i}")
    dt = time.perf_counter() - t0
    record("C6", not bad and dt < 1, f"{n - len(bad)}/{n} rows at printed digits, {dt:.2f}s")
    assert not bad and dt < 1


@pytest.mark.xfail(strict=True, reason="formula value differs from the printed entry in the last digits")
@pytest.mark.parametrize("tid,row", sorted(RHO1_KNOWN_BAD))
def test_c6_known_rows(tid, row):
    T = ref.RHO_TABLES[tid]
    r = rho1(parse_bracket(ref.family_bracket(T.template, T.ns[row - 1])), CTX).rho
    ok = sig_match(r, T.rho[row - 1])
    record("C6", ok, f"{tid} row {row}: {float(r):.10g} vs printed {T.rho[row - 1]}")
    assert ok


# ---------------------------------------------------------------- criterion 7

@pytest.mark.slow
@pytest.mark.parametrize("bracket,printed", [("[3,10,(1)]", "0.61993"), ("[2,10,(1)]", "0.51052")])
def test_c7_pade_radius(bracket, printed):
    est = rho_pade(parse_bracket(bracket), 1, 80, PrecisionContext(120))
    rel = abs(est.rho / mpfr(printed) - 1)
    ok = rel < 0.02
    record("C7", ok, f"rho_P{bracket} = {float(est.rho):.5f} (ref {printed}, rel {float(rel):.1e})")
    assert ok


# ---------------------------------------------------------------- criterion 8

def _eps_ds(tid):
    T = ref.EPS_TABLES[tid]
    return ScalingDataset.from_omegas([ref.family_bracket(T.template, n) for n in T.ns], T.eps_c, "eps_c",
                                      T.resonance, tid, ctx=CTX)


def _rho_ds(tid):
    T = ref.RHO_TABLES[tid]
    cfs = [parse_bracket(ref.family_bracket(T.template, n)) for n in T.ns]
    return ScalingDataset.from_omegas(cfs, [format(rho1(c, CTX).rho, ".35g") for c in cfs], "rho", T.resonance,
                                      tid, ctx=CTX)


@pytest.mark.parametrize("tid", ["T1", "T3", "T4"])
def test_c8_eps_slopes(tid):
    T = ref.EPS_TABLES[tid]
    out = []
    for k, (s, (v, e)) in enumerate(zip(running_slopes(_eps_ds(tid), CTX), T.slopes), 2):
        if abs(s.value - mpfr(v)) > mpfr(e):
            out.append(f"k={k} {float(s.value):.5f} vs {v}+-{e}")
    ok = not out
    record("C8", ok, f"{tid} A_k within printed bars" + ("" if ok else ": " + "; ".join(out)))
    assert ok


A_KNOWN_BAD = {("T12", 9), ("T13", 7)}


@pytest.mark.parametrize("tid", ["T11", "T12", "T13"])
def test_c8_rho_slopes(tid):
    T = ref.RHO_TABLES[tid]
    out = []
    for k, (s, (v, _)) in enumerate(zip(running_slopes(_rho_ds(tid), CTX), T.slopes), 2):
        if (tid, k) not in A_KNOWN_BAD and not sig_match(s.value, v):
            out.append(f"k={k} {float(s.value):.9f} vs {v}")
    ok = not out
    record("C8", ok, f"{tid} A'_k at printed digits" + ("" if ok else ": " + "; ".join(out)))
    assert ok


@pytest.mark.xfail(strict=True, reason="exact slope differs from the printed A' by one unit in the last digit")
@pytest.mark.parametrize("tid,k", sorted(A_KNOWN_BAD))
def test_c8_known_rho_slopes(tid, k):
    s = running_slopes(_rho_ds(tid), CTX)[k - 2].value
    printed = ref.RHO_TABLES[tid].slopes[k - 2][0]
    ok = sig_match(s, printed)
    record("C8", ok, f"{tid} k={k}: {float(s):.11f} vs printed {printed}")
    assert ok


# ---------------------------------------------------------------- criterion 9

def _printed_ds(tid):
    T = ref.EPS_TABLES[tid]
    return ScalingDataset.from_omegas([ref.family_bracket(T.template, n) for n in T.ns], T.eps_c, "eps_c",
                                      T.resonance, tid, ctx=CTX, B=T.B)


@pytest.mark.parametrize("tid", ["T1", "T3", "T4"])
def test_c9_fits(tid):
    R = ref.FITS[tid]
    ds = _printed_ds(tid)
    lin = fit(ds, "linear", CTX)
    cor = fit(ds, "exp_correction", CTX)
    d_ratio = cor.mean_square_distance / mpfr(R.corrected["distance"])
    checks = {"linear": abs(lin["beta"] - mpfr(R.linear_slope)) < mpfr("1e-3"),
              "beta": abs(cor["beta"] - mpfr(R.corrected["beta"])) < mpfr("1e-2"),
              "distance": mpfr("0.5") <= d_ratio <= 2}
    ok = all(checks.values())
    record("C9", ok, f"{tid} linear {float(lin['beta']):.5f} (ref {R.linear_slope}), corrected beta "
                     f"{float(cor['beta']):.5f} (ref {R.corrected['beta']}), distance "
                     f"{float(cor.mean_square_distance):.3g} (ref {R.corrected['distance']})")
    assert ok


# ---------------------------------------------------------------- criterion 10

def test_c10_property_suite(tmp_path):
    import time

    t0 = time.perf_counter()
    ctx = PrecisionContext(50)
    checks = {}
    with ctx.local():
        m = tangent(PhasePoint(mpfr("1.3"), mpfr("0.4")), MapParams(mpfr("0.9")))
        checks["tangent determinant"] = abs(det2(m) - 1) < ctx.tol(2)

    orb = find_orbit(3, 8, "0.6", ctx)
    with ctx.local():
        checks["orbit closure"] = max(abs(r) for r in lagrangian_residual(orb.points, 3, mpfr(orb.epsilon))) \
            < mpfr(10) ** (-ctx.digits + 12)
    r1 = residue_at(0, 1, "0.37")
    with ctx.local():
        checks["q=1 residue eps/4"] = abs(r1.value - mpfr("0.37") / 4) < mpfr(10) ** -30

    golden = parse_bracket("[1^inf]")
    s = coefficients(golden, 6, ctx)
    with ctx.local():
        checks["Lindstedt order 1"] = abs(s.terms[0].coeffs[1] - first_order(golden, ctx)) < ctx.tol(5)
        ratio = abs(functional_residual(s, "1.1", mpfr("0.02"))) / abs(functional_residual(s, "1.1", mpfr("0.01")))
        checks["residual ~ eps^(K+1)"] = abs(ratio / 2 ** 7 - 1) < 0.1

    w = parse_bracket("[3,7,(2)]")
    with ctx.local():
        x = value(w, ctx)
        rest = parse_bracket("[7,(2)]")
        lhs = bryuno(w, ctx).value
        rhs = -gmpy2.log(x) + x * bryuno(rest, ctx).value
        checks["Bryuno recursion"] = abs(lhs - rhs) < mpfr(10) ** -25

    c = [1, 3, -2, 5, 7, -1, 4]
    a = pade(c, 3, 3, ctx)
    with ctx.local():
        back = []
        for k in range(7):
            v = a.num[k] if k < len(a.num) else 0
            for j in range(1, min(k, len(a.den) - 1) + 1):
                v -= a.den[j] * back[k - j]
            back.append(v / a.den[0])
        checks["Pade order of contact"] = all(abs(u - v) < ctx.tol(25) for u, v in zip(back, c))

    with ctx.local():
        errs = [mpfr(cv.p) / cv.q - value(golden, ctx) for cv in convergents(golden, 12)[1:]]
        checks["convergent alternation"] = all(e1 * e2 < 0 for e1, e2 in zip(errs, errs[1:]))

    from kamscale.greene import residue_sequence

    plain = residue_sequence(golden, "0.8", 10).csv()
    cached = residue_sequence(golden, "0.8", 10, store=ResultStore(Cache(tmp_path / "c"))).csv()
    reread = residue_sequence(golden, "0.8", 10, store=ResultStore(Cache(tmp_path / "c"))).csv()
    checks["cache determinism"] = plain == cached == reread

    rules = ClassificationRules(q_max=300)
    full = critical_function(golden, 3, rules=rules)
    state = tmp_path / "s.json"
    seen = []

    class Stop(Exception):
        pass

    def die(h):
        seen.append(h)
        if len(seen) == 4:
            raise Stop

    try:
        critical_function(golden, 3, rules=rules, state_path=state, progress=die)
    except Stop:
        pass
    again = critical_function(golden, 3, rules=rules, state_path=state)
    checks["crash-resume"] = (again.lo, again.hi) == (full.lo, full.hi) and \
        json.dumps(again.to_json(), sort_keys=True) == json.dumps(full.to_json(), sort_keys=True)

    dt = time.perf_counter() - t0
    failed = [k for k, v in checks.items() if not v]
    ok = not failed and dt < 300
    record("C10", ok, f"{len(checks) - len(failed)}/{len(checks)} properties, {dt:.1f}s"
           + ("" if not failed else " failed: " + ", ".join(failed)))
    assert ok
