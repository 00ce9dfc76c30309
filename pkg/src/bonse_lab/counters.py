"""Incrementally maintained pi(n), pi(log n) and pi(pi(n)).

pi(log n) counts primes <= the real number log n.  Since e^q is irrational
for every prime q, log n >= q holds exactly when n >= ceil(e^q); those
integer thresholds are computed once at high precision so the counter never
depends on a rounded logarithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import gmpy2

from .sieve import PrimeCursor

SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


def _exp_ceilings() -> tuple[int, ...]:
    out = []
    with gmpy2.context(precision=300):
        for q in SMALL_PRIMES:
            out.append(int(gmpy2.ceil(gmpy2.exp(q))))
    return tuple(out)


# LOG_THRESHOLDS[i] = ceil(e^{q_i}); pi(log n) = #{i : n >= LOG_THRESHOLDS[i]}
LOG_THRESHOLDS = _exp_ceilings()
# the subset usable as int64 by the scan kernel
LOG_THRESHOLDS_I64 = np.array([t for t in LOG_THRESHOLDS if t < 1 << 63] + [(1 << 63) - 1],
                              dtype=np.int64)


def pi_small(t: float) -> int:
    """Number of primes <= t, for real 0 <= t < 100."""
    if not 0 <= t < 100:
        raise ValueError(f"pi_small needs 0 <= t < 100, got {t}")
    return sum(1 for q in SMALL_PRIMES if q <= t)


def pi_log(n: int) -> int:
    """Exact pi(log n) for integer n >= 1."""
    return sum(1 for th in LOG_THRESHOLDS if n >= th)


@dataclass
class CountingCursor:
    """(pi(n), pi(log n), pi(pi(n))) at the current index n, kept exact.

    ``next_n_prime`` is the smallest prime > n and ``next_pin_prime`` the
    smallest prime > pi(n); both come from private prime cursors.
    """

    n: int
    pi_n: int
    pi_log_n: int
    pi_pi_n: int
    next_n_prime: int
    next_pin_prime: int
    n_stream: PrimeCursor = field(repr=False, compare=False)
    pin_stream: PrimeCursor = field(repr=False, compare=False)

    @classmethod
    def at(cls, n: int = 8) -> CountingCursor:
        """A cursor at index n, initialised by a direct count."""
        if n < 8:
            raise ValueError("counting cursor needs n >= 8 (pi(log n) > 0)")
        n_stream = PrimeCursor()
        pi_n = 0
        q = n_stream.next_prime()
        while q <= n:
            pi_n += 1
            q = n_stream.next_prime()
        pin_stream = PrimeCursor()
        pi_pi = 0
        r = pin_stream.next_prime()
        while r <= pi_n:
            pi_pi += 1
            r = pin_stream.next_prime()
        return cls(n, pi_n, pi_log(n), pi_pi, q, r, n_stream, pin_stream)

    @classmethod
    def resume(cls, n: int, pi_n: int, pi_log_n: int, pi_pi_n: int) -> CountingCursor:
        """Rebuild the inner streams for stored counter values."""
        n_stream = PrimeCursor(start_after=n, next_index=pi_n + 1)
        pin_stream = PrimeCursor(start_after=pi_n, next_index=pi_pi_n + 1)
        return cls(n, pi_n, pi_log_n, pi_pi_n, n_stream.next_prime(), pin_stream.next_prime(),
                   n_stream, pin_stream)

    def counts(self) -> tuple[int, int, int]:
        return self.pi_n, self.pi_log_n, self.pi_pi_n

    def advance(self) -> CountingCursor:
        """Move from n to n + 1."""
        self.n += 1
        if self.n == self.next_n_prime:
            self.pi_n += 1
            self.next_n_prime = self.n_stream.next_prime()
            if self.pi_n == self.next_pin_prime:
                self.pi_pi_n += 1
                self.next_pin_prime = self.pin_stream.next_prime()
        if self.pi_log_n < len(LOG_THRESHOLDS) and self.n >= LOG_THRESHOLDS[self.pi_log_n]:
            self.pi_log_n += 1
        return self


def advance(cursor: CountingCursor) -> CountingCursor:
    return cursor.advance()


def brute_counts(n: int, primes: np.ndarray) -> tuple[int, int, int]:
    """(pi(n), pi(log n), pi(pi(n))) recounted from a sorted prime table."""
    pi_n = int(np.searchsorted(primes, n, side="right"))
    pi_pi = int(np.searchsorted(primes, pi_n, side="right"))
    return pi_n, pi_small(math.log(n)), pi_pi
