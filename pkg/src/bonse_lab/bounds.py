"""Closed-form prime estimates and threshold solvers.

Everything here is plain double precision.  The results only ever feed
sufficient conditions, so thresholds are nudged upward before rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

N_FLOOR = 3468
NUDGE = 1e-9


@dataclass(frozen=True)
class EffectiveConstants:
    c1: float = 8.0
    c2: float = 14.0
    n_floor: int = N_FLOOR
    c_rh: float = 1.0 / (8.0 * math.pi)

    def __post_init__(self) -> None:
        if self.c1 <= 0 or self.c2 <= 0 or self.c_rh <= 0 or self.n_floor < 2:
            raise ValueError("effective constants must be positive (n_floor >= 2)")


DEFAULT_CONSTANTS = EffectiveConstants()


def _as_float(x: Fraction | float | int) -> float:
    return float(Fraction(x)) if not isinstance(x, float) else x


def _plus_two(x: Fraction | float | int) -> float:
    # exact before rounding, so x close to -2 keeps its relative accuracy
    return float(Fraction(x) + 2)


def _check_open_interval(x: Fraction | float | int) -> float:
    if not -2 < Fraction(x) < 2:
        raise ValueError(f"x must lie in (-2, 2), got {x}")
    return _plus_two(x)


def dusart_pi_bounds(t: float) -> tuple[float | None, float]:
    """Two-sided estimate for pi(t); the lower side exists only for t >= 17."""
    if t < 2:
        raise ValueError("pi bounds need t >= 2")
    lt = math.log(t)
    upper = t / lt * (1.0 + 1.0 / lt + 2.53816 / lt**2)
    lower = t / lt if t >= 17 else None
    return lower, upper


def _axler_core(n: int) -> tuple[float, float, float]:
    y = math.log(n)
    z = math.log(y)
    return y, z, y + z - 1.0 + (z - 2.0) / y


def axler_pn_upper(n: int) -> float:
    """Upper bound for the n-th prime, valid for n >= 3468."""
    if n < N_FLOOR:
        raise ValueError(f"p_n upper bound needs n >= {N_FLOOR}")
    y, z, head = _axler_core(n)
    return n * (head - (z * z - 6.0 * z) / (2.0 * y * y))


def axler_theta_lower(n: int) -> float:
    """Lower bound for theta(p_n), valid for n >= 2."""
    if n < 2:
        raise ValueError("theta(p_n) lower bound needs n >= 2")
    y, z, head = _axler_core(n)
    return n * (head - (z * z - 6.0 * z + 11.621) / (2.0 * y * y))


def effective_lower_bound(
    n: int, x: Fraction | float, constants: EffectiveConstants = DEFAULT_CONSTANTS
) -> float:
    """(x+2) n/y - (c1 log y + c2) n/y^2 with y = log n, rounded downward."""
    if n < constants.n_floor:
        raise ValueError(f"effective bound needs n >= {constants.n_floor}")
    y = math.log(n)
    z = math.log(y)
    val = _plus_two(x) * n / y - (constants.c1 * z + constants.c2) * n / (y * y)
    # a handful of roundings, each relative to the magnitude of the terms
    slack = 8 * 2.0**-52 * ((abs(_as_float(x)) + 2.0) * n / y + (constants.c1 * z + constants.c2) * n / (y * y))
    return math.nextafter(val - slack, -math.inf)


def tail_alpha_bound(n: int, constants: EffectiveConstants = DEFAULT_CONSTANTS) -> float:
    """Upper bound for every alpha_k with k >= n (n >= n_floor).

    The effective bound makes E_k(x) > 0 as soon as
    x > -2 + (c1 log log k + c2)/log k, and the right side decreases in k.
    """
    if n < constants.n_floor:
        raise ValueError(f"tail bound needs n >= {constants.n_floor}")
    y = math.log(n)
    val = -2.0 + (constants.c1 * math.log(y) + constants.c2) / y
    return val + 1e-12 * (abs(val) + 1.0)


def threshold_y(x: Fraction | float, constants: EffectiveConstants = DEFAULT_CONSTANTS) -> float:
    """Fixed point of y -> (c1 log y + c2)/(x+2) reached from above the hump."""
    s = _check_open_interval(x)
    y = max(math.e, (constants.c1 + constants.c2) / s)
    for _ in range(100_000):
        y_next = (constants.c1 * math.log(y) + constants.c2) / s
        if abs(y_next - y) < 1e-12:
            return y_next
        y = y_next
    raise ArithmeticError(f"fixed-point iteration did not converge for x={x}")


def _ceil_exp(v: float) -> int:
    """ceil(e^v) for any finite float v, including far past the double range."""
    if v < 700.0:
        return math.ceil(math.exp(v))
    import gmpy2

    with gmpy2.context(precision=int(v / math.log(2)) + 64):
        return int(gmpy2.ceil(gmpy2.exp(gmpy2.mpfr(v))))


def n_upper(x: Fraction | float, constants: EffectiveConstants = DEFAULT_CONSTANTS) -> int:
    """Index beyond which the effective bound certifies E_n(x) > 0."""
    y = threshold_y(x, constants)
    return max(_ceil_exp(y + NUDGE), constants.n_floor)


def n_upper_for_alpha(level: float, constants: EffectiveConstants = DEFAULT_CONSTANTS) -> int | None:
    """Smallest n >= n_floor with tail_alpha_bound(n) < level, or None if unreachable."""
    if level <= -2.0:
        return None
    if level >= 2.0:
        return constants.n_floor
    n = n_upper(level, constants)
    while n > constants.n_floor and tail_alpha_bound(n - 1, constants) < level:
        n -= 1
    while tail_alpha_bound(n, constants) >= level:
        n += max(1, n // 1_000_000)
    return n


def closed_form_bound(x: Fraction | float, constants: EffectiveConstants = DEFAULT_CONSTANTS) -> float:
    """((c1+c2)/(x+2))^(2(c1+c2)/(x+2))."""
    a = (constants.c1 + constants.c2) / _check_open_interval(x)
    try:
        return a ** (2.0 * a)
    except OverflowError:
        return math.inf


def asymptotic_psi(x: Fraction | float, constants: EffectiveConstants = DEFAULT_CONSTANTS) -> float:
    """(c1/(x+2))^(c1/(x+2)), the leading behaviour as x -> -2+."""
    if Fraction(x) <= -2:
        raise ValueError("asymptotic formula needs x > -2")
    a = constants.c1 / _plus_two(x)
    try:
        return a**a
    except OverflowError:
        return math.inf


class RHThreshold(NamedTuple):
    n_rh: int
    solved: bool
    y: float


RH_Y_MIN = 5.0


def rh_n_upper(x: Fraction | float, constants: EffectiveConstants = DEFAULT_CONSTANTS) -> RHThreshold:
    """Solve y = 5 log y + 2 log(c_rh/(x+2)) by fixed-point iteration.

    Iterates from y0 = 10 + max(0, 2 log(c_rh/(x+2))).  Iterates are clamped
    at y = 5, where y - 5 log y is minimal; if the minimum of
    f(y) = y - 5 log y - 2 log(c_rh/(x+2)) is positive there is no root and
    the floor ceil(e^5) is returned with solved=False.
    """
    s = _check_open_interval(x)
    shift = 2.0 * (math.log(constants.c_rh) - math.log(s))
    floor_n = math.ceil(math.exp(RH_Y_MIN))
    if RH_Y_MIN - 5.0 * math.log(RH_Y_MIN) - shift > 0:
        return RHThreshold(floor_n, False, RH_Y_MIN)
    y = 10.0 + max(0.0, shift)
    for _ in range(10_000):
        y_next = max(5.0 * math.log(y) + shift, RH_Y_MIN)
        if abs(y_next - y) < 1e-12 * max(1.0, y):
            if y_next <= RH_Y_MIN:
                return RHThreshold(floor_n, False, RH_Y_MIN)
            return RHThreshold(_ceil_exp(y_next + NUDGE), True, y_next)
        y = y_next
    return RHThreshold(floor_n, False, RH_Y_MIN)


class RHRow(NamedTuple):
    n: int
    uncond: float
    rh: float
    ratio: float


def rh_error_report(n_values: list[int]) -> list[RHRow]:
    """Rows (n, n loglog n / log^2 n, sqrt(n) log^{3/2} n, ratio)."""
    rows = []
    for n in n_values:
        if n < 16:
            raise ValueError("report rows need n >= 16")
        y = math.log(n)
        uncond = n * math.log(y) / (y * y)
        rh = math.sqrt(n) * y**1.5
        rows.append(RHRow(n, uncond, rh, uncond / rh))
    return rows
