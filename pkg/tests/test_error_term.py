from __future__ import annotations

from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bonse_lab.certified import HPTheta, ThetaAccumulator, cert_log
from bonse_lab.counters import CountingCursor
from bonse_lab.error_term import (
    AlphaRecord,
    affine_coeffs,
    alpha_arrays,
    alpha_n,
    alpha_record,
    direct_e_n,
    e_n,
    hp_alpha,
    hp_coeffs,
    hp_e_n,
    k_exponent,
    parse_rational,
    x_float,
)

from oracles import Oracle, primes_by_trial

# 50-digit oracle values (trial-division primes, mpmath logs)
ORACLE_ALPHA = {
    8: "1.434598283984914308248609",
    9: "1.645617778969185670811738",
    10: "1.710763147193699560934512",
    11: "1.264287515050569377913749",
    12: "1.339910727916698878532164",
}
ORACLE_A8 = "-8.99634924323316502556144"
ORACLE_B8 = "6.270988431858299381613506"
ORACLE_THETA_19 = "16.08760448420003250089258"

ORACLE = Oracle(3000)


def float_state(n):
    ps = primes_by_trial(n + 1)
    acc = ThetaAccumulator()
    for p in ps[:n]:
        acc.add(cert_log(p))
    return acc, CountingCursor.at(n), cert_log(ps[n])


def hp_state(n):
    ps = np.array(primes_by_trial(n + 1), dtype=np.int64)
    return HPTheta.zero().add_primes(ps[:n]), CountingCursor.at(n), int(ps[n])


def test_parse_rational():
    assert parse_rational("0.1") == Fraction(1, 10)
    assert parse_rational("1/3") == Fraction(1, 3)
    assert parse_rational("-1.25") == Fraction(-5, 4)
    assert parse_rational(" 2 ") == 2
    for bad in ["1e-3", "nan", "inf", "0x10", "", "1/0.5"]:
        with pytest.raises(ValueError):
            parse_rational(bad)


@given(st.fractions(min_value=-10, max_value=10, max_denominator=10**12))
def test_x_float_bounds_the_conversion_error(x):
    xf, err = x_float(x)
    assert abs(Fraction(xf) - x) <= Fraction(err)


def test_k_exponent_exact():
    # n=10: pi=4, pi(log 10)=1, pi(pi)=2
    assert k_exponent(10, (4, 1, 2), Fraction(1, 2)) == 10 - 4 + 4 - 1
    assert k_exponent(11, CountingCursor.at(11), Fraction(0)) == 11 - 5 + 5
    with pytest.raises(ValueError):
        k_exponent(7, (4, 0, 2), Fraction(0))


def test_theta_19():
    acc, _, _ = float_state(8)
    v = acc.value()
    assert v.contains(float(mp.mpf(ORACLE_THETA_19)))


def test_coefficients_at_8_enclose_oracle():
    acc, counts, L = float_state(8)
    a, b = affine_coeffs(8, acc, counts, L)
    assert a.contains(float(mp.mpf(ORACLE_A8)))
    assert b.contains(float(mp.mpf(ORACLE_B8)))
    assert a.radius < 1e-13 and b.radius < 1e-13


@pytest.mark.parametrize("n", sorted(ORACLE_ALPHA))
def test_alpha_enclosures_match_oracle(n):
    acc, counts, L = float_state(n)
    a, b = affine_coeffs(n, acc, counts, L)
    lo, hi = alpha_n(a, b)
    ref = float(mp.mpf(ORACLE_ALPHA[n]))
    assert lo <= ref <= hi
    assert hi - lo < 1e-13


@pytest.mark.parametrize("n", sorted(ORACLE_ALPHA))
def test_high_precision_alpha_to_many_digits(n):
    th, counts, p_next = hp_state(n)
    a, b = hp_coeffs(th, n, counts, p_next)
    al = hp_alpha(a, b)
    with mp.workdps(30):
        assert abs(mp.mpf(str(al.value)) - mp.mpf(ORACLE_ALPHA[n])) < mp.mpf(10) ** -24
    assert al.radius < 1e-60


def test_direct_and_affine_evaluations_agree():
    acc, counts, L = float_state(100)
    a, b = affine_coeffs(100, acc, counts, L)
    for x in [Fraction(-1, 3), Fraction(1, 10), Fraction(3, 2)]:
        e1 = e_n(a, b, x)
        e2 = direct_e_n(acc, k_exponent(100, counts, x), L)
        # both enclose the same number, so the intervals overlap
        assert e1.lo <= e2.hi and e2.lo <= e1.hi
        ref = float(ORACLE.e_n(100, x))
        assert e1.contains(ref) and e2.contains(ref)


def test_alpha_arrays_match_scalar():
    acc, counts, L = float_state(50)
    a, b = affine_coeffs(50, acc, counts, L)
    lo, hi = alpha_arrays(np.array([a.value]), np.array([a.radius]), np.array([b.value]), np.array([b.radius]))
    assert (lo[0], hi[0]) == alpha_n(a, b)


def test_alpha_record_validates():
    acc, counts, L = float_state(9)
    a, b = affine_coeffs(9, acc, counts, L)
    rec = alpha_record(9, a, b)
    assert rec.alpha_lo <= rec.alpha <= rec.alpha_hi
    with pytest.raises(ValueError):
        AlphaRecord(9, a, b, 2.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(8, 3000), x=st.fractions(min_value="-199/100", max_value="199/100", max_denominator=10**6))
def test_certified_sign_never_contradicts_oracle(n, x):
    ps = primes_by_trial(n + 1)
    acc = ThetaAccumulator()
    for p in ps[:n]:
        acc.add(cert_log(p))
    a, b = affine_coeffs(n, acc, CountingCursor.at(n), cert_log(ps[n]))
    e = e_n(a, b, x)
    ref = ORACLE.e_n(n, x)
    if e.value - e.radius > 0:
        assert ref > 0
    elif e.value + e.radius < 0:
        assert ref < 0


def test_hp_sign_resolves_near_threshold():
    th, counts, p_next = hp_state(10)
    a, b = hp_coeffs(th, 10, counts, p_next)
    with mp.workdps(60):
        al = mp.mpf(ORACLE_ALPHA[10])
    for eps in (Fraction(1, 10**15), Fraction(-1, 10**15)):
        x = Fraction(str(mp.nstr(al, 25))) + eps
        assert hp_e_n(a, b, x).sign() == (1 if eps > 0 else -1)
