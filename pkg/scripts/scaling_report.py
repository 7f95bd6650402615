"""Bryuno-exponent report for the tabulated families.

eps_c families use the printed values; the rho families use exact rho1.
"""

from kamscale import reference as ref
from kamscale.numerics import PrecisionContext
from kamscale.pade import rho1
from kamscale.rotation import parse_bracket
from kamscale.scaling import ScalingDataset, beta_report, report_csv, report_text

CTX = PrecisionContext(40)


def families():
    for tid, T in ref.EPS_TABLES.items():
        yield ScalingDataset.from_omegas([ref.family_bracket(T.template, n) for n in T.ns], T.eps_c, "eps_c",
                                         T.resonance, tid, ctx=CTX)
    for tid in ("T11", "T12", "T13"):
        T = ref.RHO_TABLES[tid]
        cfs = [parse_bracket(ref.family_bracket(T.template, n)) for n in T.ns]
        yield ScalingDataset.from_omegas(cfs, [format(rho1(c, CTX).rho, ".35g") for c in cfs], "rho",
                                         T.resonance, tid, ctx=CTX)


if __name__ == "__main__":
    reps = beta_report(list(families()), CTX)
    print(report_text(reps))
    with open("scaling_report.csv", "w") as fh:
        fh.write(report_csv(reps))
