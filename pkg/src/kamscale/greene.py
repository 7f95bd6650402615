"""Greene's residue criterion along the convergents of a rotation number,
bisection for the critical function, critical residue sequences."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal, getcontext
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import gmpy2
from gmpy2 import mpfr

from .cache import ResultStore, atomic_write
from .errors import BudgetExhausted, Inconclusive, NotSubcritical
from .numerics import fmt, linear_fit
from .orbits import DEFAULT_SCHEDULE, PeriodicOrbit, Residue, eps_string, residue_at
from .rotation import ContinuedFraction, Convergent, convergents, convergents_upto

getcontext().prec = 60


class Verdict(str, Enum):
    SUBCRITICAL = "subcritical"
    SUPERCRITICAL = "supercritical"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class ClassificationRules:
    r_high: float = 10.0
    r_low: float = 1e-3
    n_low: int = 3
    # same-phase trend test used only once the convergent ceiling is reached
    trend_fallback: bool = True
    trend_points: int = 3
    q_max: Optional[int] = None
    schedule: tuple = DEFAULT_SCHEDULE


@dataclass
class ResidueSequence:
    omega: ContinuedFraction
    epsilon: str
    entries: list = field(default_factory=list)

    def values(self) -> list:
        return [r.value for _, r in self.entries]

    def csv(self) -> str:
        rows = ["k,p,q,residue,digits"]
        for c, r in self.entries:
            rows.append(f"{c.k},{c.p},{c.q},{fmt(r.value, 15)},{r.digits}")
        return "\n".join(rows) + "\n"


def _sequence(omega: ContinuedFraction, epsilon: str, convs: Iterable[Convergent],
              schedule: Sequence[int], store: Optional[ResultStore],
              stop: Optional[Callable[[list], bool]] = None, min_value_digits: float = 0) -> ResidueSequence:
    seq = ResidueSequence(omega, epsilon)
    guide: Optional[PeriodicOrbit] = None
    prev_res: Optional[Residue] = None
    start = 0
    for c in convs:
        r = store.get_residue(c.p, c.q, epsilon) if store else None
        if r is not None and r.value_digits < min_value_digits:
            r = None
        if r is None:
            if guide is None and prev_res is not None and store is not None:
                guide = store.get_orbit(prev_res.p, prev_res.q, epsilon, prev_res.digits)
            r = residue_at(c.p, c.q, epsilon, schedule, guide=guide, start_digits=start,
                           min_value_digits=min_value_digits)
            if store:
                store.put_residue(r)
            guide = r.orbit
        else:
            guide = None
        prev_res = r
        start = r.digits
        seq.entries.append((c, r))
        if stop is not None and stop(seq.entries):
            break
    return seq


def residue_sequence(omega: ContinuedFraction, epsilon, k_max: int, q_max: Optional[int] = None,
                     schedule: Sequence[int] = DEFAULT_SCHEDULE,
                     store: Optional[ResultStore] = None) -> ResidueSequence:
    convs = convergents(omega, k_max)
    if q_max is not None:
        convs = [c for c in convs if c.q <= q_max]
    return _sequence(omega, eps_string(epsilon), convs, schedule, store)


def _early(entries: list, rules: ClassificationRules) -> Optional[Verdict]:
    vals = [abs(r.value) for _, r in entries]
    if vals and vals[-1] > rules.r_high:
        return Verdict.SUPERCRITICAL
    n = rules.n_low
    if len(vals) >= n:
        tail = vals[-n:]
        if all(v < rules.r_low for v in tail) and all(tail[i + 1] <= tail[i] for i in range(n - 1)):
            return Verdict.SUBCRITICAL
    return None


def trend_verdict(values: Sequence, period: int, points: int = 3) -> Verdict:
    """Sign of the last `points` same-phase differences R_k - R_{k-period}."""
    if len(values) < period + points:
        return Verdict.UNDECIDED
    d = [values[-1 - i] - values[-1 - i - period] for i in range(points)]
    if all(x > 0 for x in d):
        return Verdict.SUPERCRITICAL
    if all(x < 0 for x in d):
        return Verdict.SUBCRITICAL
    return Verdict.UNDECIDED


def classify_sequence(omega: ContinuedFraction, epsilon, k_max: int, rules: Optional[ClassificationRules] = None,
                      store: Optional[ResultStore] = None) -> tuple:
    """(verdict, ResidueSequence)."""
    rules = rules or ClassificationRules()
    if k_max < 3:
        raise ValueError("k_max must be >= 3")
    convs = convergents(omega, k_max)
    if rules.q_max is not None:
        convs = [c for c in convs if c.q <= rules.q_max]
    eps = eps_string(epsilon)
    seq = _sequence(omega, eps, convs, rules.schedule, store, stop=lambda e: _early(e, rules) is not None)
    v = _early(seq.entries, rules)
    if v is None:
        v = Verdict.UNDECIDED
        if rules.trend_fallback:
            v = trend_verdict(seq.values(), max(1, len(omega.tail)), rules.trend_points)
    return v, seq


def classify(omega: ContinuedFraction, epsilon, k_max: int, rules: Optional[ClassificationRules] = None,
             store: Optional[ResultStore] = None) -> Verdict:
    return classify_sequence(omega, epsilon, k_max, rules, store)[0]


@dataclass
class CriticalEstimate:
    omega: ContinuedFraction
    lo: Decimal
    hi: Decimal
    k_max: int
    history: list = field(default_factory=list)
    target_digits: int = 4

    @property
    def value(self) -> Decimal:
        return (self.lo + self.hi) / 2

    @property
    def error(self) -> Decimal:
        return (self.hi - self.lo) / 2

    def rounded(self) -> str:
        return str(self.value.quantize(Decimal(1).scaleb(-self.target_digits)))

    def to_json(self) -> dict:
        return {"omega": self.omega.canonical(), "lo": str(self.lo), "hi": str(self.hi),
                "epsilon_c": self.rounded(), "error": str(self.error), "k_max": self.k_max,
                "target_digits": self.target_digits, "history": self.history}


def critical_function(omega: ContinuedFraction, target_digits: int = 4, k_max: Optional[int] = None,
                      rules: Optional[ClassificationRules] = None, store: Optional[ResultStore] = None,
                      lo="0", hi="2", k_ceiling: Optional[int] = None, state_path: Optional[Path] = None,
                      progress: Optional[Callable[[dict], None]] = None) -> CriticalEstimate:
    """Bisection on eps with Greene classification at each midpoint.

    Undecided midpoints raise k_max by 4 convergents up to k_ceiling (and
    the q_max of the rules); past that, Inconclusive carries the bracket.
    With state_path the history is persisted after every step and replayed
    on restart.
    """
    if omega.is_rational:
        raise ValueError("critical function needs an irrational rotation number")
    rules = rules or ClassificationRules(q_max=5000)
    if k_max is None:
        k_max = max(3, len(convergents_upto(omega, rules.q_max))) if rules.q_max else 20
    k_ceiling = k_ceiling if k_ceiling is not None else k_max + 8
    est = CriticalEstimate(omega, Decimal(str(lo)), Decimal(str(hi)), k_max, [], target_digits)
    width = Decimal(1).scaleb(-target_digits)
    if state_path is not None and Path(state_path).exists():
        saved = json.loads(Path(state_path).read_text())
        if saved.get("omega") == omega.canonical() and saved.get("target_digits") == target_digits:
            for h in saved["history"]:
                _apply(est, h)
            est.k_max = saved.get("k_max", est.k_max)
    while est.error > width:
        mid = est.value
        k = est.k_max
        while True:
            v, seq = classify_sequence(omega, str(mid), k, rules, store)
            if v is not Verdict.UNDECIDED:
                break
            reachable = len(convergents_upto(omega, rules.q_max)) if rules.q_max else k + 4
            if k + 4 > k_ceiling or reachable <= len(seq.entries):
                raise Inconclusive("undecided at the convergent ceiling", omega=omega.canonical(),
                                   epsilon=str(mid), lo=str(est.lo), hi=str(est.hi), k_max=k,
                                   history=est.history)
            k += 4
        est.k_max = k
        h = {"epsilon": str(mid), "verdict": v.value, "k_max": k,
             "entries": [[c.k, c.p, c.q, fmt(r.value, 12), r.digits] for c, r in seq.entries]}
        _apply(est, h)
        if state_path is not None:
            atomic_write(Path(state_path), json.dumps(est.to_json(), indent=1))
        if progress:
            progress(h)
    return est


def _apply(est: CriticalEstimate, h: dict) -> None:
    eps = Decimal(h["epsilon"])
    for old in est.history:
        e_old = Decimal(old["epsilon"])
        if old["verdict"] == "supercritical" and h["verdict"] == "subcritical" and eps > e_old or \
                old["verdict"] == "subcritical" and h["verdict"] == "supercritical" and eps < e_old:
            raise Inconclusive("non-monotone classification", epsilon=h["epsilon"], against=old["epsilon"])
    est.history.append(h)
    if h["verdict"] == "subcritical":
        est.lo = max(est.lo, eps)
    elif h["verdict"] == "supercritical":
        est.hi = min(est.hi, eps)


def critical_residues(omega: ContinuedFraction, epsilon_c, k_range: Iterable[int],
                      schedule: Sequence[int] = DEFAULT_SCHEDULE,
                      store: Optional[ResultStore] = None) -> ResidueSequence:
    ks = sorted(set(int(k) for k in k_range))
    allc = convergents(omega, ks[-1])
    seq = _sequence(omega, eps_string(epsilon_c), [c for c in allc if c.k >= ks[0]], schedule, store)
    seq.entries = [(c, r) for c, r in seq.entries if c.k in ks]
    return seq


def limit_cycle(seq: ResidueSequence, period: int) -> list:
    """Last `period` residues: the estimate of the limiting cycle."""
    vals = seq.values()
    return vals[-period:]


def decay_rate(omega: ContinuedFraction, epsilon, k_range: Iterable[int],
               schedule: Sequence[int] = DEFAULT_SCHEDULE, store: Optional[ResultStore] = None,
               rules: Optional[ClassificationRules] = None) -> mpfr:
    """-slope of log R_k against q_k; +inf when every residue vanishes."""
    rules = rules or ClassificationRules()
    ks = sorted(set(int(k) for k in k_range))
    allc = convergents(omega, ks[-1])
    seq = _sequence(omega, eps_string(epsilon), [c for c in allc if c.k >= ks[0]], schedule, store,
                    min_value_digits=8)
    pts = [(c.q, r.value) for c, r in seq.entries if c.k in ks]
    if all(v == 0 for _, v in pts):
        return mpfr("inf")
    if any(abs(v) > rules.r_high for _, v in pts) or any(v <= 0 for _, v in pts):
        raise NotSubcritical("residues do not decay", epsilon=eps_string(epsilon))
    xs = [q for q, _ in pts]
    ys = [gmpy2.log(v) for _, v in pts]
    fit = linear_fit(xs, ys)
    if fit.slope >= 0:
        raise NotSubcritical("residues do not decay", epsilon=eps_string(epsilon), slope=float(fit.slope))
    return -fit.slope
