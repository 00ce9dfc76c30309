from __future__ import annotations

import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bonse_lab.certified import (
    CertifiedReal,
    HPTheta,
    Sign,
    ThetaAccumulator,
    bump,
    cert_log,
    cert_sign,
    fast_two_sum,
    two_sum,
    ulp,
)

from oracles import primes_by_trial

finite = st.floats(-1e12, 1e12, allow_nan=False, allow_infinity=False)
radii = st.floats(0, 1e3, allow_nan=False, allow_infinity=False)


def test_ulp_values():
    assert ulp(1.0) == 2.0**-52
    assert ulp(0.0) == 0.0
    assert ulp(-3.0) == 2.0**-51
    assert bump(1.0) == 1.0 + 8 * 2.0**-52


@given(finite, finite)
def test_two_sum_is_exact(a, b):
    s, e = two_sum(a, b)
    assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)


@given(finite, finite)
def test_fast_two_sum_is_exact_when_ordered(a, b):
    if abs(a) < abs(b):
        a, b = b, a
    s, e = fast_two_sum(a, b)
    assert Fraction(s) + Fraction(e) == Fraction(a) + Fraction(b)


@given(finite, radii, finite, radii, st.sampled_from(["+", "-", "*"]))
def test_operations_enclose_exact_result(a, ra, b, rb, op):
    x, y = CertifiedReal(a, ra), CertifiedReal(b, rb)
    # the exact result for the centre values must be inside
    fa, fb = Fraction(a), Fraction(b)
    z = {"+": x + y, "-": x - y, "*": x * y}[op]
    exact = {"+": fa + fb, "-": fa - fb, "*": fa * fb}[op]
    assert Fraction(z.value) - Fraction(z.radius) <= exact <= Fraction(z.value) + Fraction(z.radius)


def test_radius_must_be_non_negative():
    with pytest.raises(ValueError):
        CertifiedReal(1.0, -1e-300)


@pytest.mark.parametrize("p", [2, 3, 97, 32327, 15_485_863, 2**61 - 1])
def test_cert_log_contains_true_log(p):
    c = cert_log(p)
    with mp.workdps(40):
        t = mp.log(p)
        assert mp.mpf(c.lo) <= t <= mp.mpf(c.hi)


def test_cert_sign():
    assert cert_sign(CertifiedReal(1.0, 0.5)) is Sign.POSITIVE
    assert cert_sign(CertifiedReal(-1.0, 0.5)) is Sign.NEGATIVE
    assert cert_sign(CertifiedReal(0.1, 0.5)) is Sign.INDETERMINATE


def test_theta_accumulator_encloses_theta():
    ps = primes_by_trial(20_000)
    acc = ThetaAccumulator()
    for p in ps:
        acc.add(cert_log(p))
    with mp.workdps(40):
        exact = mp.fsum(mp.log(p) for p in ps)
        v = acc.value()
        assert mp.mpf(v.lo) <= exact <= mp.mpf(v.hi)
    # radius stays small: per-term log error dominates
    assert v.radius < 20_000 * 12 * 2.0**-50


def test_hp_theta_matches_mpmath_and_round_trips():
    ps = np.array(primes_by_trial(5000), dtype=np.int64)
    hp = HPTheta.zero().add_primes(ps[:2001]).add_primes(ps[2001:])
    assert hp.count == 5000
    with mp.workdps(90):
        exact = mp.fsum(mp.log(int(p)) for p in ps)
        assert abs(mp.mpf(str(hp.value)) - exact) < hp.radius + mp.mpf(10) ** -70
    back = HPTheta.from_string(hp.to_string(), hp.count)
    assert back.value == hp.value and back.count == hp.count


def test_hp_theta_handles_large_primes():
    ps = np.array([2**61 - 1, 2**31 - 1, 4_294_967_311], dtype=np.int64)
    hp = HPTheta.zero().add_primes(ps)
    with mp.workdps(90):
        exact = mp.fsum(mp.log(int(p)) for p in ps)
        assert abs(mp.mpf(str(hp.value)) - exact) < 1e-60


def test_underflowing_product_keeps_a_radius():
    tiny = CertifiedReal(6.149290060907858e-264, 0.0)
    prod = tiny * tiny
    assert prod.value == 0.0
    assert prod.radius > 0.0
