import gmpy2
import mpmath as mp
import pytest
from gmpy2 import mpfr
from hypothesis import given, settings
from hypothesis import strategies as st

from kamscale.dynamics import MapParams, step
from kamscale.errors import RationalRotation, SmallDivisorUnderflow
from kamscale.lindstedt import (coefficients, curve, evaluate, first_order, functional_residual,
                                radius_root_test, root_test_from_norms)
from kamscale.numerics import PrecisionContext
from kamscale.rotation import ContinuedFraction, parse_bracket, value

CTX = PrecisionContext(50)
GOLDEN = parse_bracket("[1^∞]")
irrationals = st.builds(lambda h, t: ContinuedFraction(tuple(h), (t,)),
                        st.lists(st.integers(1, 40), max_size=3), st.integers(1, 8))


@settings(max_examples=10)
@given(irrationals)
def test_first_order_closed_form(w):
    s = coefficients(w, 1, CTX)
    with CTX.local():
        assert set(s.terms[0].coeffs) == {1}
        c = s.terms[0].coeffs[1]
        assert abs(c - first_order(w, CTX)) <= CTX.tol(5) * abs(c)


def test_second_order_oracle():
    s = coefficients(GOLDEN, 2, CTX)
    assert set(s.terms[1].coeffs) == {2}
    with mp.workdps(50):
        g = (mp.sqrt(5) - 1) / 2
        ref = 1 / (32 * mp.sin(mp.pi * g) ** 2 * mp.sin(2 * mp.pi * g) ** 2)
        assert abs(mp.mpf(str(s.terms[1].coeffs[2])) - ref) < mp.mpf(10) ** -40


@settings(max_examples=8)
@given(irrationals, st.integers(3, 14))
def test_parity(w, K):
    s = coefficients(w, K, PrecisionContext(30))
    for t in s.terms:
        assert all(nu % 2 == t.order % 2 and 1 <= nu <= t.order for nu in t.coeffs)


@pytest.mark.parametrize("alpha", ["0.3", "1", "2.5"])
def test_modewise_functional_equation(alpha):
    """Order k of D^2 u equals order k-1 of sin(alpha + u); Taylor side by mpmath."""
    K = 8
    s = coefficients(GOLDEN, K, CTX)
    with CTX.local():
        shift = 2 * gmpy2.const_pi() * value(GOLDEN, CTX)
        a0, ap, am = (s.at(mpfr(alpha) + d) for d in (0, shift, -shift))
    with mp.workdps(50):
        coeffs = [mp.mpf(str(v)) for v in a0]
        f = lambda e: mp.sin(mp.mpf(alpha) + sum(coeffs[j] * e ** j for j in range(1, K + 1)))
        rhs = mp.taylor(f, 0, K - 1)
        for k in range(1, K + 1):
            lhs = mp.mpf(str(ap[k])) - 2 * coeffs[k] + mp.mpf(str(am[k]))
            assert abs(lhs - rhs[k - 1]) < mp.mpf(10) ** -30 * (1 + abs(rhs[k - 1]))


def test_zero_eps_and_odd_points():
    s = coefficients(GOLDEN, 6, CTX)
    with CTX.local():
        assert evaluate(s, "0.7", 0) == 0
        for a in (mpfr(0), gmpy2.const_pi()):
            assert abs(evaluate(s, a, "0.3")) < CTX.tol(5)


@pytest.mark.parametrize("K", [4, 7])
def test_residual_scales_as_eps_power(K):
    s = coefficients(GOLDEN, K, CTX)
    with CTX.local():
        r1 = abs(functional_residual(s, "1.1", mpfr("0.02")))
        r2 = abs(functional_residual(s, "1.1", mpfr("0.01")))
        ratio = r1 / r2
        assert abs(ratio / 2 ** (K + 1) - 1) < 0.1


def test_curve_unperturbed():
    s = coefficients(GOLDEN, 3, CTX)
    with CTX.local():
        p = curve(s, "0.4", 0)
        assert p.x == mpfr("0.4")
        assert abs(p.y - 2 * gmpy2.const_pi() * value(GOLDEN, CTX)) < CTX.tol(2)


def test_conjugacy_residual():
    K = 6
    s = coefficients(GOLDEN, K, CTX)
    with CTX.local():
        shift = 2 * gmpy2.const_pi() * value(GOLDEN, CTX)

        def err(e):
            a = mpfr("0.9")
            img = step(curve(s, a, e), MapParams(e))
            tgt = curve(s, a + shift, e)
            return max(abs(img.x - tgt.x), abs(img.y - tgt.y))

        assert abs(err(mpfr("0.02")) / err(mpfr("0.01")) / 2 ** (K + 1) - 1) < 0.15


def test_mean_momentum():
    s = coefficients(GOLDEN, 5, CTX)
    with CTX.local():
        n = 64
        ys = [curve(s, 2 * gmpy2.const_pi() * j / n, "0.2").y for j in range(n)]
        assert abs(sum(ys) / n - 2 * gmpy2.const_pi() * value(GOLDEN, CTX)) < CTX.tol(5)


def test_root_test_geometric_series():
    r = mpfr("0.8")
    with CTX.local():
        est = root_test_from_norms([r ** -k for k in range(1, 31)])
        assert abs(est / r - 1) < 0.02


def test_golden_root_test_bounded():
    s = coefficients(GOLDEN, 30, PrecisionContext(40))
    rt = radius_root_test(s, grid=64)
    assert 0.5 < rt.rho < 1.5


def test_errors():
    with pytest.raises(RationalRotation):
        coefficients(parse_bracket("[3]"), 3, CTX)
    with pytest.raises(SmallDivisorUnderflow):
        coefficients(ContinuedFraction((10 ** 30,), (1,)), 2, PrecisionContext(40))
    with pytest.raises(ValueError):
        coefficients(GOLDEN, 0, CTX)


def test_csv_layout():
    s = coefficients(GOLDEN, 3, PrecisionContext(30))
    rows = s.csv().splitlines()
    assert rows[0] == "k,nu,s_nu" and len(rows) == 1 + 1 + 1 + 2
