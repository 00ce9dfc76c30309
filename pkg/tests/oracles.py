"""Reference computations that share no code with the package.

Primes come from trial division, logarithms and sums from mpmath.
"""
from __future__ import annotations

import math
from functools import lru_cache

import mpmath as mp

ORACLE_DPS = 50  # about 166 bits


@lru_cache(maxsize=None)
def primes_by_trial(count: int) -> tuple[int, ...]:
    """The first ``count`` primes."""
    ps: list[int] = []
    k = 2
    while len(ps) < count:
        r = math.isqrt(k)
        if all(k % p for p in ps if p <= r):
            ps.append(k)
        k += 1
    return tuple(ps)


def pi_exact(t: float, primes: tuple[int, ...]) -> int:
    return sum(1 for p in primes if p <= t)


def pi_log_exact(n: int) -> int:
    with mp.workdps(ORACLE_DPS):
        y = mp.log(n)
        return sum(1 for p in primes_by_trial(30) if p <= y)


class Oracle:
    """theta(p_n), a_n, b_n, alpha_n and E_n(x) at ORACLE_DPS digits."""

    def __init__(self, n_max: int) -> None:
        self.primes = primes_by_trial(n_max + 1)
        with mp.workdps(ORACLE_DPS):
            acc = mp.mpf(0)
            self.theta = [acc]
            for p in self.primes:
                acc += mp.log(p)
                self.theta.append(acc)
        self._pi = {}

    def pi(self, t: int) -> int:
        import bisect

        return bisect.bisect_right(self.primes, t)

    def coeffs(self, n: int):
        with mp.workdps(ORACLE_DPS):
            L = mp.log(self.primes[n])
            pn = self.pi(n)
            c = n - pn + mp.mpf(pn) / pi_log_exact(n)
            a = self.theta[n] - c * L
            b = self.pi(pn) * L
            return a, b

    def alpha(self, n: int):
        a, b = self.coeffs(n)
        with mp.workdps(ORACLE_DPS):
            return -a / b

    def e_n(self, n: int, x) -> mp.mpf:
        """x given as a Fraction."""
        a, b = self.coeffs(n)
        with mp.workdps(ORACLE_DPS):
            return a + b * mp.mpf(x.numerator) / x.denominator
