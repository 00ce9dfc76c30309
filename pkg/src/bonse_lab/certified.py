"""Value-plus-radius arithmetic for the quantities whose sign matters.

Rounding is round-to-nearest throughout; every operation adds a full ulp of
its result to the radius (twice the half-ulp that can actually be lost), and
each radius update is bumped by eight ulps of itself, which covers the
roundings made while summing the radius terms.  The scalar helpers are numba-compiled so the scan kernel and the
Python-level API perform bit-identical arithmetic.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import gmpy2
from numba import njit

HP_PRECISION = 256
# Relative error of one correctly rounded 256-bit operation, doubled.
HP_REL = 2.0**-255


@njit(cache=True)
def ulp(x):
    """Unit in the last place of |x| (0 for x == 0)."""
    if x == 0.0:
        return 0.0
    _, e = math.frexp(abs(x))
    # never below the smallest subnormal, where ldexp would underflow to 0
    return max(math.ldexp(1.0, e - 53), 5e-324)


@njit(cache=True)
def mul_err(v):
    """Rounding error bound for a product or quotient rounded to v.

    A result of 0 may hide an underflow, so it still gets the smallest subnormal.
    """
    return ulp(v) if v != 0.0 else 5e-324


@njit(cache=True)
def bump(r):
    """r pushed up by 8 ulps (covers up to 16 half-ulp roundings of r)."""
    return r + 8.0 * ulp(r)


@njit(cache=True)
def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


@njit(cache=True)
def fast_two_sum(a, b):
    # requires |a| >= |b|
    s = a + b
    return s, b - (s - a)


@njit(cache=True)
def log_radius(v):
    # platform log within 1 ulp, plus rounding of the argument
    return 2.0 * ulp(v)


@njit(cache=True)
def theta_step(hi, lo, radius, term, term_radius):
    """Add one certified term to the two-term expansion (hi, lo)."""
    s, e = two_sum(hi, term)
    lo2 = lo + e
    hi2, lo3 = fast_two_sum(s, lo2)
    return hi2, lo3, bump(radius + term_radius + ulp(lo2))


@njit(cache=True)
def affine_core(hi, lo, theta_radius, n, pi_n, pi_log, pi_pi, L, rL):
    """a_n, b_n and their radii from theta(p_n) = hi + lo and L = log p_{n+1}."""
    q = pi_n / pi_log
    c = float(n - pi_n) + q
    rc = ulp(q) + ulp(c)
    cL = c * L
    t = hi - cL
    a = t + lo
    ra = theta_radius + c * rL + rc * (L + rL) + ulp(cL) + ulp(t) + ulp(a)
    b = pi_pi * L
    rb = pi_pi * rL + ulp(b)
    return a, bump(ra), b, bump(rb)


@njit(cache=True)
def affine_eval(a, ra, b, rb, xf, xerr):
    """a + b*x for an exact x within xerr of the double xf."""
    bx = b * xf
    e = a + bx
    r = ra + abs(xf) * rb + (b + rb) * xerr + mul_err(bx) + ulp(e)
    return e, bump(r)


@njit(cache=True)
def sign_code(value, radius):
    """+1 certified positive, -1 certified negative, 0 undecided."""
    if value - radius > 0.0:
        return 1
    if value + radius < 0.0:
        return -1
    return 0


class Sign(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1
    INDETERMINATE = 0


@dataclass(frozen=True)
class CertifiedReal:
    """The exact quantity lies in [value - radius, value + radius]."""

    value: float
    radius: float = 0.0

    def __post_init__(self) -> None:
        if not self.radius >= 0.0:
            raise ValueError("radius must be non-negative")

    @property
    def lo(self) -> float:
        return math.nextafter(self.value - self.radius, -math.inf) if self.radius else self.value

    @property
    def hi(self) -> float:
        return math.nextafter(self.value + self.radius, math.inf) if self.radius else self.value

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def __add__(self, other: CertifiedReal) -> CertifiedReal:
        v = self.value + other.value
        return CertifiedReal(v, bump(self.radius + other.radius + ulp(v)))

    def __sub__(self, other: CertifiedReal) -> CertifiedReal:
        v = self.value - other.value
        return CertifiedReal(v, bump(self.radius + other.radius + ulp(v)))

    def __neg__(self) -> CertifiedReal:
        return CertifiedReal(-self.value, self.radius)

    def scale(self, k: int) -> CertifiedReal:
        """Multiply by an exact integer (|k| < 2**53)."""
        v = self.value * k
        return CertifiedReal(v, bump(abs(k) * self.radius + mul_err(v)))

    def __mul__(self, other: CertifiedReal) -> CertifiedReal:
        v = self.value * other.value
        r = (
            abs(self.value) * other.radius
            + abs(other.value) * self.radius
            + self.radius * other.radius
            + mul_err(v)
        )
        return CertifiedReal(v, bump(r))


def cert_log(p: int) -> CertifiedReal:
    """Natural log of an integer p >= 2 with a 2-ulp radius."""
    if p < 2:
        raise ValueError("cert_log needs p >= 2")
    v = math.log(p)
    r = log_radius(v)
    if p >= 1 << 53:
        # float(p) is rounded: |log(float p) - log p| <= 2^-53
        r = bump(r + 2.0**-52)
    return CertifiedReal(v, r)


def cert_sign(v: CertifiedReal) -> Sign:
    return Sign(sign_code(v.value, v.radius))


@dataclass
class ThetaAccumulator:
    """Running sum of certified logs held as an unevaluated pair hi + lo."""

    hi: float = 0.0
    lo: float = 0.0
    radius: float = 0.0
    count: int = 0

    def add(self, term: CertifiedReal) -> ThetaAccumulator:
        if term.value < 0:
            raise ValueError("theta terms are logs of primes and must be >= 0")
        self.hi, self.lo, self.radius = theta_step(self.hi, self.lo, self.radius, term.value, term.radius)
        self.count += 1
        return self

    def value(self) -> CertifiedReal:
        v = self.hi + self.lo
        return CertifiedReal(v, bump(self.radius + ulp(v)))


def acc_add(acc: ThetaAccumulator, term: CertifiedReal) -> ThetaAccumulator:
    return acc.add(term)


# --- high-precision side (escalation and oracles) ---------------------------


def hp_context() -> gmpy2.context:
    return gmpy2.context(precision=HP_PRECISION)


@dataclass
class HPTheta:
    """theta(p_n) at 256-bit precision.

    Each ``add_primes`` call over k primes loses at most
    (k/32 + 4)(1 + theta) 2^-255 to rounding, so after ``count`` primes the
    error is below 5 count (1 + theta) 2^-255; ``radius`` reports that bound.
    Decimal round trips use 90 digits, which reproduce a 256-bit value exactly.
    """

    value: gmpy2.mpfr
    count: int = 0

    @classmethod
    def zero(cls) -> HPTheta:
        with hp_context():
            return cls(gmpy2.mpfr(0))

    @property
    def radius(self) -> float:
        return 5.0 * self.count * HP_REL * (1.0 + float(self.value)) * (1 + 2.0**-40)

    def copy(self) -> HPTheta:
        return HPTheta(self.value, self.count)

    def add_primes(self, primes) -> HPTheta:
        """Add log p for every prime in ``primes`` (a numpy int64 array)."""
        n = len(primes)
        if n == 0:
            return self
        if int(primes[-1]) < 1 << 32:
            u = primes.astype("uint64")
            ints = (u[0 : n - 1 : 2] * u[1::2]).tolist()
            if n % 2:
                ints.append(int(primes[-1]))
        else:
            ints = primes.tolist()
        with hp_context():
            acc = gmpy2.mpfr(1)
            for i in range(0, len(ints), 16):
                acc *= math.prod(ints[i : i + 16])
            self.value = self.value + gmpy2.log(acc)
        self.count += n
        return self

    def to_string(self) -> str:
        mant, exp, _ = self.value.digits(10, 90)
        sign = "-" if mant.startswith("-") else ""
        return f"{sign}0.{mant.lstrip('-')}e{exp}"

    @classmethod
    def from_string(cls, text: str, count: int) -> HPTheta:
        with hp_context():
            return cls(gmpy2.mpfr(text), count)


def hp_log(p: int) -> gmpy2.mpfr:
    with hp_context():
        return gmpy2.log(gmpy2.mpfr(p))
