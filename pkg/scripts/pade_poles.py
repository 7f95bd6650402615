"""Pole clouds of [N/N] approximants for [3,n,1^inf] (plot with the .gp files).

    python3 scripts/pade_poles.py --order 80 --digits 120 20 50
"""

import argparse
from pathlib import Path

from kamscale.numerics import PrecisionContext
from kamscale.pade import poles_csv, rho1, rho_pade
from kamscale.rotation import parse_bracket

ap = argparse.ArgumentParser()
ap.add_argument("ns", nargs="*", type=int, default=[10, 20])
ap.add_argument("--order", type=int, default=80)
ap.add_argument("--digits", type=int, default=120)
ap.add_argument("--out", type=Path, default=Path("runs/poles"))
a = ap.parse_args()
a.out.mkdir(parents=True, exist_ok=True)
ctx = PrecisionContext(a.digits)
for n in a.ns:
    w = parse_bracket(f"[3,{n},(1)]")
    est = rho_pade(w, 1, a.order, ctx)
    (a.out / f"poles_n{n}.csv").write_text(poles_csv(est.details["poles"]))
    print(f"n={n:4d} rho_P={float(est.rho):.6f} rho1={float(rho1(w).rho):.6f} "
          f"doublets={est.details['spurious']}")
