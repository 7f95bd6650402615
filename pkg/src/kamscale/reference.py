"""Reference values (decimal strings) for the reproduction drivers T1..T13.

Slopes are stored as (value, error) where an error is printed, otherwise
(value, None). Families are described by a bracket template with one 'n'.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class EpsFamily:
    template: str
    resonance: tuple
    ns: tuple
    B: tuple
    eps_c: tuple
    slopes: tuple  # len(ns) - 1 entries


@dataclass(frozen=True)
class RhoFamily:
    template: str
    resonance: tuple
    ns: tuple
    rho: tuple
    slopes: tuple
    eta: Optional[tuple] = None
    rho_pade: Optional[tuple] = None
    slopes_pade: Optional[tuple] = None


@dataclass(frozen=True)
class ResidueTable:
    omega: str
    epsilon: str
    rows: tuple  # (p, q, residue)


T1 = EpsFamily(
    "[n,(1)]", (0, 1),
    (500, 700, 1000, 2000, 4000, 7000, 10000, 12000, 15000, 18000, 20000, 25000, 30000, 40000, 50000, 60000),
    ("6.21836", "6.55376", "6.90963", "7.60184", "8.29452", "8.85393", "9.21053", "9.39284", "9.61593",
     "9.79823", "9.90358", "10.12671", "10.30902", "10.59668", "10.81982", "11.00213"),
    ("0.016585", "0.0121005", "0.0086401", "0.0044599", "0.0022854", "0.0013265", "0.00093627", "0.00078320",
     "0.00062927", "0.00052610", "0.00047433", "0.00038081", "0.00031816", "0.00023955", "0.000192161",
     "0.000160443"),
    (("0.9399", "0.0002"), ("0.9465", "0.0001"), ("0.9553", "0.0001"), ("0.9652", "0.0001"),
     ("0.9724", "0.0002"), ("0.9770", "0.0002"), ("0.9793", "0.0001"), ("0.9808", "0.0001"),
     ("0.9823", "0.0002"), ("0.9833", "0.0004"), ("0.9842", "0.0002"), ("0.9859", "0.0003"),
     ("0.9865", "0.0003"), ("0.9879", "0.0003"), ("0.9895", "0.0002")),
)

T2 = EpsFamily(
    "[n,20,(1)]", (0, 1),
    (500, 700, 1000, 2000, 4000),
    ("6.22088", "6.55556", "6.91089", "7.60247", "8.29483"),
    ("0.016303", "0.011926", "0.008535", "0.004421", "0.002271"),
    (("0.9341", "0.0004"), ("0.9415", "0.0006"), ("0.9512", "0.0005"), ("0.962", "0.001")),
)

T3 = EpsFamily(
    "[2,n,(1)]", (1, 2),
    (500, 700, 1000, 2000, 4000, 7000, 10000, 13000, 17000, 20000),
    ("3.80022", "3.96840", "4.14674", "4.49337", "4.84001", "5.11987", "5.29823", "5.42943", "5.56357",
     "5.64484"),
    ("0.12872", "0.109967", "0.092932", "0.066777", "0.047805", "0.036420", "0.030598", "0.026909",
     "0.023591", "0.021780"),
    (("0.9362", "0.0005"), ("0.9438", "0.0001"), ("0.9535", "0.0001"), ("0.9642", "0.0001"),
     ("0.9720", "0.0002"), ("0.9766", "0.0003"), ("0.9792", "0.0006"), ("0.9810", "0.0006"),
     ("0.983", "0.001")),
)

T4 = EpsFamily(
    "[3,n,(1)]", (1, 3),
    (500, 700, 1000, 2000, 4000, 7000, 10000, 13000, 17000, 20000),
    ("3.17069", "3.28264", "3.40139", "3.63230", "3.86330", "4.04983", "4.16872", "4.25617", "4.34559",
     "4.39977"),
    ("0.244787", "0.22044", "0.197080", "0.158153", "0.126588", "0.105608", "0.094035", "0.086319",
     "0.079072", "0.074973"),
    (("0.9358", "0.0001"), ("0.9433", "0.0001"), ("0.9529", "0.0001"), ("0.9637", "0.0001"),
     ("0.9715", "0.0001"), ("0.9763", "0.0002"), ("0.9787", "0.0003"), ("0.9807", "0.0003"),
     ("0.9826", "0.0005")),
)

# omega, eps_c, R_inf
T5 = (
    ("[(1)]", "0.971635406", "0.250088"),
    ("[(2)]", "0.957445408", "0.2275138"),
    ("[(3)]", "0.890863502", "0.202230"),
    ("[(4)]", "0.80472544", "0.17923"),
    ("[10,(2)]", "0.481985986", "0.22751"),
    ("[1,3,(2)]", "0.829500533", "0.22751"),
    ("[7,(3)]", "0.615071885", "0.2022"),
    ("[1,2,(4)]", "0.86423037", "0.1792"),
)

T6 = ResidueTable("[(1,2)]", "0.876067426", (
    (3, 4, "0.24871"), (8, 11, "0.18612"), (11, 15, "0.25216"), (30, 41, "0.18516"), (41, 56, "0.25275"),
    (112, 153, "0.18493"), (153, 209, "0.25288"), (418, 571, "0.18487"), (571, 780, "0.25291"),
    (1560, 2131, "0.18486"), (2131, 2911, "0.25292"), (5822, 7953, "0.18485"), (7953, 10864, "0.25292"),
    (21728, 29681, "0.18485"), (29681, 40545, "0.25292"), (81090, 110771, "0.18486"),
))

T7 = ResidueTable("[(2,1)]", "0.9402827", (
    (3, 8, "0.19574"), (4, 11, "0.24746"), (11, 30, "0.18763"), (15, 41, "0.25145"), (41, 112, "0.18556"),
    (56, 153, "0.25254"), (153, 418, "0.18503"), (209, 571, "0.25282"), (571, 1560, "0.18490"),
    (780, 2131, "0.25290"), (2131, 5822, "0.18486"), (2911, 7953, "0.25292"), (7953, 21728, "0.18486"),
    (10864, 29681, "0.25292"), (29681, 81090, "0.18486"), (40545, 110771, "0.25293"),
))

# the printed epsilon for this table repeats the previous one; kept as printed
T8 = ResidueTable("[(1,1,2)]", "0.9402827", (
    (3, 5, "0.2242"), (4, 7, "0.2639"), (7, 12, "0.2278"), (18, 31, "0.2222"), (25, 43, "0.2660"),
    (43, 74, "0.2270"), (111, 191, "0.2227"), (154, 265, "0.2656"), (265, 456, "0.2272"),
    (684, 1177, "0.2226"), (949, 1633, "0.2656"), (1633, 2810, "0.2271"), (4215, 7253, "0.2227"),
    (5848, 10063, "0.2656"), (10063, 17316, "0.2271"), (25974, 44695, "0.2227"), (36037, 62011, "0.2656"),
    (62011, 106706, "0.2272"),
))

T9 = RhoFamily(
    "[2,n,(1)]", (1, 2),
    (10, 12, 15, 20, 30, 40, 50),
    ("0.51409", "0.43571", "0.35462", "0.27066", "0.18368", "0.13901", "0.11181"),
    (("2.19667", None), ("2.14426", None), ("2.09658", None), ("2.05439", None), ("2.02821", None),
     ("2.01612", None)),
    eta=("0.0224860", "0.0190577", "0.0155106", "0.0118382", "0.0080339", "0.0060801", "0.0048906"),
    rho_pade=("0.51052", "0.43355", "0.35352", "0.27024", "0.18361", "0.13902", "0.11184"),
    slopes_pade=("2.17013", "2.12464", "2.08449", "2.04822", "2.02484", "2.01480"),
)

T10 = RhoFamily(
    "[3,n,(1)]", (1, 3),
    (10, 12, 13, 20, 30, 40, 50, 100, 200),
    ("0.62329", "0.55734", "0.53038", "0.40444", "0.31180", "0.25871", "0.22364", "0.14177", "0.08959"),
    (("2.28295", None), ("2.23762", None), ("2.17212", None), ("2.09982", None), ("2.06311", None),
     ("2.04490", None), ("2.02455", None), ("2.00902", None)),
    eta=("0.0101459", "0.0085791", "0.0079642", "0.0053033", "0.0035899", "0.0027132", "0.0021807",
         "0.0011006", "0.0005529"),
    rho_pade=("0.61993", "0.55524", "0.52858", "0.40400", "0.31182", "0.25872", "0.22360", "0.14179",
              "0.08961"),
    slopes_pade=("2.24934", "2.22067", "2.15360", "2.09051", "2.06339", "2.04795", "2.02313", "2.00866"),
)

T11 = RhoFamily(
    "[n,(1)]", (0, 1),
    (500, 700, 1000, 2000, 4000, 7000, 10000, 12000, 15000, 18000, 20000, 25000, 30000, 40000, 50000),
    ("0.000130355", "0.0000665545", "0.000032629", "0.00000816229", "0.0000020412", "0.000000666603",
     "0.000000326653", "0.000000226847", "0.000000145185", "0.000000100824", "0.0000000816683",
     "0.0000000522684", "0.0000000362978", "0.0000000204177", "0.0000000130674"),
    tuple((v, None) for v in ("2.0042837", "2.0030298", "2.0018183", "2.0009090", "2.0004825", "2.0003028",
                              "2.0002303", "2.0001882", "2.0001536", "2.0001329", "2.0001129", "2.0000921",
                              "2.0000730", "2.0000565")),
)

T12 = RhoFamily(
    "[2,n,(1)]", (1, 2),
    (500, 700, 1000, 2000, 4000, 7000, 10000, 13000, 17000, 20000),
    ("0.011405915", "0.008152279", "0.005709327", "0.002856258", "0.001428528", "0.000816400", "0.000571507",
     "0.000439632", "0.000336196", "0.000285770"),
    tuple((v, None) for v in ("1.9968638", "1.9973651", "1.9980597", "1.9987793", "1.9992292", "1.9994593",
                              "1.9995765", "1.9996572", "1.9997123")),
)

T13 = RhoFamily(
    "[3,n,(1)]", (1, 3),
    (500, 700, 1000, 2000, 4000, 7000, 10000, 13000, 17000, 20000),
    ("0.04873028", "0.03895268", "0.03071760", "0.01935701", "0.01219611", "0.00839894", "0.00662168",
     "0.00555920", "0.00464887", "0.00417153"),
    tuple((v, None) for v in ("2.0004598", "2.0000489", "1.9997910", "1.9997289", "1.9997744", "1.9998204",
                              "1.9998501", "1.9998731", "1.9998900")),
)

EPS_TABLES = {"T1": T1, "T2": T2, "T3": T3, "T4": T4}
RHO_TABLES = {"T9": T9, "T10": T10, "T11": T11, "T12": T12, "T13": T13}
RESIDUE_TABLES = {"T6": T6, "T7": T7, "T8": T8}


@dataclass(frozen=True)
class FitReference:
    linear_slope: str
    linear_intercept: Optional[str] = None
    linear_distance: Optional[str] = None
    corrected: dict = field(default_factory=dict)


# y = -log v = const + beta B + correction
FITS = {
    "T1": FitReference("0.9705", "-1.9553", "0.0396",
                       {"const": "-2.34630", "beta": "1.00359", "amplitude": "1.59684", "exponent": "0.3302",
                        "distance": "0.000210"}),
    "T3": FitReference("0.9641", "-1.6203", "0.0124",
                       {"const": "-1.86364", "beta": "1.00308", "amplitude": "1.43766", "exponent": "0.69671",
                        "distance": "0.0000512"}),
    "T4": FitReference("0.9637", "-1.6526", "0.00832",
                       {"const": "-1.84393", "beta": "1.00344", "amplitude": "1.82643", "exponent": "1.0300",
                        "distance": "0.0000403"}),
    "T11": FitReference("2.00091", corrected={"beta": "1.9999989"}),
    "T13": FitReference("1.99984", None, "0.0000858",
                        {"beta": "2.000000287", "distance": "2.389e-8",
                         "beta_b0": "1.99966", "distance_b0": "0.0000413",
                         "beta_c0": "1.99967", "distance_c0": "0.0000393"}),
}
# more precise linear slopes quoted alongside the corrected fits
LINEAR_BETA = {"T1": "0.97052", "T3": "0.96413", "T4": "0.96369"}


def family_bracket(template: str, n: int) -> str:
    return template.replace("n", str(n), 1)
