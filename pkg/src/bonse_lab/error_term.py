"""The error term E_n(x) = theta(p_n) - k(n,x) log p_{n+1} and its threshold alpha_n.

E_n is affine in x: E_n(x) = a_n + b_n x with
    a_n = theta(p_n) - (n - pi(n) + pi(n)/pi(log n)) log p_{n+1}
    b_n = pi(pi(n)) log p_{n+1} > 0,
so E_n(x) > 0 exactly when x > alpha_n = -a_n / b_n.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import gmpy2
import numpy as np

from .certified import (
    CertifiedReal,
    HPTheta,
    ThetaAccumulator,
    affine_core,
    affine_eval,
    bump,
    hp_context,
    HP_REL,
    ulp,
)
from .counters import CountingCursor

Rational = Fraction
Counts = Union[CountingCursor, tuple]

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")
_FRACTION = re.compile(r"^[+-]?\d+/\d+$")


def parse_rational(text: str) -> Fraction:
    """Exact rational from a decimal ("0.1") or fraction ("1/3") string.

    Exponent notation and non-finite values are rejected: the threshold
    function is discontinuous, so "0.1" must mean exactly 1/10.
    """
    s = text.strip()
    if _DECIMAL.match(s) or _FRACTION.match(s):
        return Fraction(s)
    raise ValueError(f"not an exact decimal or fraction: {text!r}")


def x_float(x: Fraction) -> tuple[float, float]:
    """Nearest double to x and a bound on |double - x|."""
    xf = float(x)
    err = abs(Fraction(xf) - x)
    return xf, (0.0 if err == 0 else bump(float(err) + ulp(float(err))))


def _unpack(counts: Counts) -> tuple[int, int, int]:
    if isinstance(counts, CountingCursor):
        return counts.counts()
    pi_n, pi_log_n, pi_pi_n = counts
    return int(pi_n), int(pi_log_n), int(pi_pi_n)


def k_exponent(n: int, counts: Counts, x: Fraction) -> Fraction:
    """n - pi(n) + pi(n)/pi(log n) - x pi(pi(n)), exactly."""
    pi_n, pi_log_n, pi_pi_n = _unpack(counts)
    if pi_log_n < 1:
        raise ValueError("pi(log n) must be positive (n >= 8)")
    return n - pi_n + Fraction(pi_n, pi_log_n) - Fraction(x) * pi_pi_n


@dataclass(frozen=True)
class AlphaRecord:
    n: int
    a: CertifiedReal
    b: CertifiedReal
    alpha_lo: float
    alpha_hi: float

    def __post_init__(self) -> None:
        if not self.b.value - self.b.radius > 0:
            raise ValueError("b_n must be certified positive")
        if not self.alpha_lo <= self.alpha_hi:
            raise ValueError("empty alpha enclosure")

    @property
    def alpha(self) -> float:
        return 0.5 * (self.alpha_lo + self.alpha_hi)


def affine_coeffs(
    n: int, theta: ThetaAccumulator, counts: Counts, log_p_next: CertifiedReal
) -> tuple[CertifiedReal, CertifiedReal]:
    pi_n, pi_log_n, pi_pi_n = _unpack(counts)
    a, ra, b, rb = affine_core(theta.hi, theta.lo, theta.radius, n, pi_n, pi_log_n, pi_pi_n,
                               log_p_next.value, log_p_next.radius)
    return CertifiedReal(a, ra), CertifiedReal(b, rb)


def e_n(a: CertifiedReal, b: CertifiedReal, x: Fraction) -> CertifiedReal:
    xf, xerr = x_float(Fraction(x))
    v, r = affine_eval(a.value, a.radius, b.value, b.radius, xf, xerr)
    return CertifiedReal(v, r)


def direct_e_n(theta: ThetaAccumulator, k: Fraction, log_p_next: CertifiedReal) -> CertifiedReal:
    """theta(p_n) - k log p_{n+1} evaluated without the affine split."""
    kf = float(k)
    rk = float(abs(Fraction(kf) - k)) * (1 + 2.0**-50)
    L, rL = log_p_next.value, log_p_next.radius
    kL = kf * L
    t = theta.hi - kL
    v = t + theta.lo
    r = theta.radius + abs(kf) * rL + rk * (L + rL) + ulp(kL) + ulp(t) + ulp(v)
    return CertifiedReal(v, bump(r))


def alpha_n(a: CertifiedReal, b: CertifiedReal) -> tuple[float, float]:
    """Outward-rounded enclosure of -a/b (b certified positive)."""
    b_lo = b.value - b.radius
    if not b_lo > 0:
        raise ValueError("alpha_n needs b certified positive")
    b_lo = math.nextafter(b_lo, -math.inf)
    b_hi = math.nextafter(b.value + b.radius, math.inf)
    na_lo = math.nextafter(-a.value - a.radius, -math.inf)
    na_hi = math.nextafter(-a.value + a.radius, math.inf)
    lo = min(na_lo / b_lo, na_lo / b_hi)
    hi = max(na_hi / b_lo, na_hi / b_hi)
    return math.nextafter(lo, -math.inf), math.nextafter(hi, math.inf)


def alpha_arrays(a, ra, b, rb) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``alpha_n`` over arrays of coefficients and radii."""
    b_lo = np.nextafter(b - rb, -np.inf)
    if not np.all(b_lo > 0):
        raise ValueError("alpha_n needs b certified positive")
    b_hi = np.nextafter(b + rb, np.inf)
    na_lo = np.nextafter(-a - ra, -np.inf)
    na_hi = np.nextafter(-a + ra, np.inf)
    lo = np.minimum(na_lo / b_lo, na_lo / b_hi)
    hi = np.maximum(na_hi / b_lo, na_hi / b_hi)
    return np.nextafter(lo, -np.inf), np.nextafter(hi, np.inf)


def alpha_record(n: int, a: CertifiedReal, b: CertifiedReal) -> AlphaRecord:
    lo, hi = alpha_n(a, b)
    return AlphaRecord(n, a, b, lo, hi)


# --- high-precision evaluation -------------------------------------------------


@dataclass(frozen=True)
class HPValue:
    """A 256-bit value with an absolute error bound."""

    value: gmpy2.mpfr
    radius: float

    def sign(self) -> int:
        if self.value - self.radius > 0:
            return 1
        if self.value + self.radius < 0:
            return -1
        return 0


def hp_coeffs(theta: HPTheta, n: int, counts: Counts, p_next: int) -> tuple[HPValue, HPValue]:
    """a_n and b_n at 256-bit precision."""
    pi_n, pi_log_n, pi_pi_n = _unpack(counts)
    c = n - pi_n + Fraction(pi_n, pi_log_n)
    with hp_context():
        L = gmpy2.log(gmpy2.mpfr(p_next))
        cL = gmpy2.mpfr(c.numerator) * L / c.denominator
        a = theta.value - cL
        b = pi_pi_n * L
    mag = float(abs(cL)) + float(abs(theta.value))
    ra = theta.radius + 8 * HP_REL * mag + HP_REL * float(abs(a))
    rb = 4 * HP_REL * float(b)
    return HPValue(a, ra), HPValue(b, rb)


def hp_e_n(a: HPValue, b: HPValue, x: Fraction) -> HPValue:
    x = Fraction(x)
    with hp_context():
        e = a.value + b.value * x.numerator / x.denominator
    r = a.radius + b.radius * abs(float(x)) * 1.001 + 4 * HP_REL * (float(abs(a.value)) + float(abs(b.value)) * abs(float(x)) + 1)
    return HPValue(e, r)


def hp_alpha(a: HPValue, b: HPValue) -> HPValue:
    with hp_context():
        al = -a.value / b.value
    bl = float(b.value) - b.radius
    r = (a.radius + abs(float(al)) * b.radius) / bl + 4 * HP_REL * abs(float(al))
    return HPValue(al, r)
