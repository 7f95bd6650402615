"""Command-line front end: `python -m kamscale <command> [options]`.

Domain errors exit 1 and print {code, message, context} as JSON on stderr;
malformed input exits 2.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .cache import Cache, ResultStore, atomic_write, default_cache_dir
from .errors import KamError, ParseError

COMMANDS = ("bryuno", "orbit", "residue", "critical", "lindstedt", "pade", "rho1", "slopes", "fit", "reproduce")


@dataclass
class JobSpec:
    command: str
    omega: Optional[str] = None
    epsilon: Optional[str] = None
    digits: Optional[int] = None
    target_digits: int = 4
    k_max: Optional[int] = None
    order: Optional[int] = None
    out: Optional[Path] = None
    cache_dir: Optional[Path] = None
    extra: dict = field(default_factory=dict)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is not None:
        atomic_write(Path(out), text)
    sys.stdout.write(text)


def _omega(spec: JobSpec):
    from .rotation import parse_bracket

    if not spec.omega:
        raise ParseError("--omega is required")
    return parse_bracket(spec.omega)


def _store(spec: JobSpec) -> Optional[ResultStore]:
    if spec.extra.get("no_cache"):
        return None
    return ResultStore(Cache(spec.cache_dir or default_cache_dir()))


def _cmd_bryuno(spec: JobSpec) -> int:
    from .numerics import PrecisionContext, fmt
    from .rotation import bryuno, format_bracket, value

    cf = _omega(spec)
    ctx = PrecisionContext(spec.digits or 30)
    b = bryuno(cf, ctx)
    _emit(json.dumps({"omega": format_bracket(cf), "omega_value": fmt(value(cf, ctx), ctx.digits),
                      "B": fmt(b.value, b.digits_valid)}, indent=1) + "\n", spec.out)
    return 0


def _pq(spec: JobSpec) -> tuple:
    p, q = spec.extra.get("p"), spec.extra.get("q")
    if p is None or q is None:
        raise ParseError("--p and --q are required")
    return p, q


def _cmd_orbit(spec: JobSpec) -> int:
    from .numerics import PrecisionContext
    from .orbits import find_orbit, orbit_to_text

    p, q = _pq(spec)
    if spec.epsilon is None:
        raise ParseError("--epsilon is required")
    orb = find_orbit(p, q, spec.epsilon, PrecisionContext(spec.digits or 38))
    _emit(orbit_to_text(orb), spec.out)
    return 0


def _cmd_residue(spec: JobSpec) -> int:
    from .greene import residue_sequence
    from .numerics import fmt
    from .orbits import DEFAULT_SCHEDULE, residue_at

    if spec.epsilon is None:
        raise ParseError("--epsilon is required")
    sched = tuple(d for d in DEFAULT_SCHEDULE if spec.digits is None or d <= spec.digits) or (spec.digits,)
    if spec.omega:
        seq = residue_sequence(_omega(spec), spec.epsilon, spec.k_max or 12, schedule=sched, store=_store(spec))
        _emit(seq.csv(), spec.out)
        return 0
    p, q = _pq(spec)
    r = residue_at(p, q, spec.epsilon, sched)
    _emit(f"p,q,residue,digits\n{p},{q},{fmt(r.value, 15)},{r.digits}\n", spec.out)
    return 0


def _cmd_critical(spec: JobSpec) -> int:
    from .greene import ClassificationRules, critical_function

    cf = _omega(spec)
    out = Path(spec.out or "critical.json")
    state = Path(spec.extra.get("state") or str(out) + ".state")
    rules = ClassificationRules(q_max=spec.extra.get("q_max") or 5000,
                                schedule=tuple(d for d in (38, 76, 150, 300, 600, 1200)
                                               if d <= (spec.digits or 150)))

    def progress(h):
        print(f"eps={h['epsilon']} {h['verdict']} k_max={h['k_max']}", file=sys.stderr)

    est = critical_function(cf, spec.target_digits, k_max=spec.k_max, rules=rules, store=_store(spec),
                            state_path=state, progress=progress)
    text = json.dumps(est.to_json(), indent=1) + "\n"
    atomic_write(out, text)
    sys.stdout.write(text)
    return 0


def _cmd_lindstedt(spec: JobSpec) -> int:
    from .lindstedt import coefficients, radius_root_test
    from .numerics import PrecisionContext, fmt

    ser = coefficients(_omega(spec), spec.order or 40, PrecisionContext(spec.digits or 60))
    _emit(ser.csv(), spec.out)
    print(f"root-test radius {fmt(radius_root_test(ser).rho, 8)}", file=sys.stderr)
    return 0


def _cmd_pade(spec: JobSpec) -> int:
    from .numerics import PrecisionContext, fmt
    from .pade import poles_csv, rho_pade

    est = rho_pade(_omega(spec), spec.extra.get("alpha") or "1", spec.order or 80,
                   PrecisionContext(spec.digits or 120))
    _emit(poles_csv(est.details["poles"]), spec.out)
    print(json.dumps({"rho_pade": fmt(est.rho, 10), "pole": str(est.details["pole"]),
                      "spurious": est.details["spurious"]}), file=sys.stderr)
    return 0


def _cmd_rho1(spec: JobSpec) -> int:
    from .numerics import PrecisionContext, fmt
    from .pade import rho1

    est = rho1(_omega(spec), PrecisionContext(spec.digits or 40))
    d = est.details
    _emit(json.dumps({"rho1": fmt(est.rho, 5), "rho1_full": fmt(est.rho, 20), "p": d["p"], "q": d["q"],
                      "eta": fmt(d["eta"], 8)}, indent=1) + "\n", spec.out)
    return 0


def _dataset(spec: JobSpec):
    from . import reference as ref
    from .scaling import ScalingDataset, read_dataset

    kind = spec.extra.get("kind") or "eps_c"
    table = spec.extra.get("table")
    if table:
        t = table.upper()
        if t in ref.EPS_TABLES:
            T = ref.EPS_TABLES[t]
            return ScalingDataset.from_omegas([ref.family_bracket(T.template, n) for n in T.ns], T.eps_c,
                                              "eps_c", T.resonance, t)
        if t in ref.RHO_TABLES:
            T = ref.RHO_TABLES[t]
            return ScalingDataset.from_omegas([ref.family_bracket(T.template, n) for n in T.ns], T.rho,
                                              "rho", T.resonance, t)
        raise ParseError("no dataset for table", table=table)
    path = spec.extra.get("input")
    if not path:
        raise ParseError("--input or --table is required")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError("cannot read input", path=str(path)) from exc
    ds = read_dataset(text, kind, name=Path(path).stem)
    if spec.extra.get("resonance"):
        p, q = spec.extra["resonance"].split("/")
        ds.resonance = (int(p), int(q))
    return ds


def _cmd_slopes(spec: JobSpec) -> int:
    from .numerics import fmt
    from .rotation import format_bracket
    from .scaling import running_slopes

    ds = _dataset(spec)
    rows = ["k,omega,B,value,A,A_err"]
    sl = running_slopes(ds)
    for i, r in enumerate(ds.rows):
        a = f"{fmt(sl[i - 1].value, 8)},{fmt(sl[i - 1].error, 2)}" if i else ","
        rows.append(f"{i + 1},\"{format_bracket(r.omega)}\",{fmt(r.B, 10)},{r.value},{a}")
    _emit("\n".join(rows) + "\n", spec.out)
    return 0


def _cmd_fit(spec: JobSpec) -> int:
    from .numerics import fmt
    from .scaling import beta_report, fit, report_text

    ds = _dataset(spec)
    model = spec.extra.get("model")
    if model is None:
        _emit(report_text(beta_report([ds])), spec.out)
        return 0
    opts = {k: spec.extra[k] for k in ("reading", "fix") if spec.extra.get(k)}
    f = fit(ds, model, **opts)
    out = {"model": f.model, "params": {k: fmt(v, 12) for k, v in f.params.items()},
           "mean_square_distance": fmt(f.mean_square_distance, 6), "mean_square": fmt(f.mean_square, 6)}
    if "disagree" in f.extra:
        out["grid_lm_disagree"] = f.extra["disagree"]
    _emit(json.dumps(out, indent=1) + "\n", spec.out)
    return 0


def _cmd_reproduce(spec: JobSpec) -> int:
    from .reproduce import ReproduceConfig, reproduce

    table = spec.extra.get("table")
    if not table:
        raise ParseError("reproduce needs a table id (T1..T13, F1..F3)")
    cfg = ReproduceConfig(table, spec.extra.get("budget") or "desk", Path(spec.out or "reproduce_out"),
                          spec.extra.get("workers") or 1, spec.cache_dir or default_cache_dir(),
                          bool(spec.extra.get("partial")))
    rep = reproduce(cfg)
    for f in rep.files:
        print(cfg.out_dir / f)
    return 0


HANDLERS = {"bryuno": _cmd_bryuno, "orbit": _cmd_orbit, "residue": _cmd_residue, "critical": _cmd_critical,
            "lindstedt": _cmd_lindstedt, "pade": _cmd_pade, "rho1": _cmd_rho1, "slopes": _cmd_slopes,
            "fit": _cmd_fit, "reproduce": _cmd_reproduce}


def run(spec: JobSpec) -> int:
    if spec.command not in HANDLERS:
        raise ParseError("unknown command", command=spec.command)
    return HANDLERS[spec.command](spec)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kamscale", description="Critical functions, Bryuno scaling and Lindstedt radii "
                                                              "for the standard map.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("table", nargs="?", help="table/figure id for reproduce, or reference table for slopes/fit")
    ap.add_argument("--omega", help='continued fraction, e.g. "[2,500,(1)]" or "[2,500,1^inf]"')
    ap.add_argument("--epsilon")
    ap.add_argument("--digits", type=int)
    ap.add_argument("--target-digits", type=int, default=4)
    ap.add_argument("--k-max", type=int)
    ap.add_argument("--q-max", type=int)
    ap.add_argument("--order", type=int)
    ap.add_argument("--alpha", help="evaluation angle for pade (default 1)")
    ap.add_argument("--p", type=int)
    ap.add_argument("--q", type=int)
    ap.add_argument("--out", type=Path)
    ap.add_argument("--state", type=Path, help="bisection state file (default <out>.state)")
    ap.add_argument("--cache-dir", type=Path)
    ap.add_argument("--no-cache", action="store_true")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--budget", choices=("desk", "lab", "paper"), default="desk")
    ap.add_argument("--partial", action="store_true", help="reproduce: exit 0 when rows were skipped")
    ap.add_argument("--input", type=Path, help="CSV with columns omega,value")
    ap.add_argument("--kind", choices=("eps_c", "rho"))
    ap.add_argument("--resonance", help="p/q the family approaches (for --input datasets)")
    ap.add_argument("--model", choices=("linear", "exp_correction", "b_plus_cB_correction", "exp_B_correction"))
    ap.add_argument("--reading", choices=("exp", "power"))
    ap.add_argument("--fix", choices=("b", "c"))
    return ap


def _spec(ns: argparse.Namespace) -> JobSpec:
    extra = {k: getattr(ns, k) for k in ("table", "q_max", "alpha", "p", "q", "state", "no_cache", "workers",
                                         "budget", "partial", "input", "kind", "resonance", "model", "reading", "fix")}
    return JobSpec(ns.command, ns.omega, ns.epsilon, ns.digits, ns.target_digits, ns.k_max, ns.order, ns.out,
                   ns.cache_dir or (Path(os.environ["KAM_CACHE_DIR"]) if os.environ.get("KAM_CACHE_DIR") else None),
                   extra)


def _fail(exc: KamError, code: int) -> int:
    sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        spec = _spec(ns)
        return run(spec)
    except ParseError as exc:
        return _fail(exc, 2)
    except KamError as exc:
        return _fail(exc, 1)
    except ValueError as exc:
        return _fail(ParseError(str(exc)), 2)


if __name__ == "__main__":
    sys.exit(main())
