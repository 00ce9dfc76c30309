"""Segmented sieve of Eratosthenes with independent, restartable cursors.

Segments are odd-only: slot ``i`` of a window based at odd ``w`` stands for
``w + 2*i``.  The prime 2 is emitted as a special case.  Base primes up to
the square root of the sieved range are kept in one shared, read-only table
that grows on demand (growth swaps in a new array; old references stay valid).
"""
from __future__ import annotations

import math
import queue
import threading
from typing import Iterator

import numpy as np
from numba import njit

DEFAULT_SEGMENT = 1 << 20
DEFAULT_MEM_BUDGET = 1 << 30
SMALL_LIMIT = 40_000
MAX_VALUE = (1 << 63) - 1


class SieveMemoryError(MemoryError):
    """Raised when a sieve would need more memory than its budget allows."""


def simple_sieve(limit: int) -> np.ndarray:
    """All primes <= limit, by a plain (non-segmented) sieve."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=np.bool_)
    flags[:2] = False
    flags[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if flags[p]:
            flags[p * p :: 2 * p] = False
    return np.flatnonzero(flags).astype(np.int64)


@njit(cache=True)
def _mark_segment(seg, lo, base_primes):
    # seg[i] <-> lo + 2*i, lo odd; base_primes sorted, may include 2
    n = seg.shape[0]
    hi = lo + 2 * n
    for k in range(base_primes.shape[0]):
        p = base_primes[k]
        if p == 2:
            continue
        sq = p * p
        if sq >= hi:
            break
        if sq >= lo:
            start = sq
        else:
            start = lo + ((p - lo % p) % p)
            if start % 2 == 0:
                start += p
        for i in range((start - lo) // 2, n, p):
            seg[i] = False


class BasePrimes:
    """Shared table of sieving primes; only ever grows."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.bound = 0
        self.primes = np.empty(0, dtype=np.int64)

    def covering(self, hi: int) -> np.ndarray:
        """Return a table containing every prime <= isqrt(hi) + 1."""
        need = math.isqrt(hi) + 1
        primes = self.primes
        if need <= self.bound:
            return primes
        with self._lock:
            if need > self.bound:
                bound = max(need, 2 * self.bound, 1 << 16)
                self.primes = simple_sieve(bound)
                self.bound = bound
            return self.primes


_SHARED_BASE = BasePrimes()


def memory_estimate(limit: int, segment_size: int = DEFAULT_SEGMENT) -> int:
    """Rough byte count needed to sieve every value up to ``limit``."""
    root = math.isqrt(max(limit, 4)) + 1
    n_base = root / max(math.log(root), 1.0) * 1.3
    return segment_size + root + int(8 * n_base)


def segment_primes(lo: int, hi: int, base: BasePrimes | None = None) -> np.ndarray:
    """Primes in the half-open range [lo, hi), computed by one segmented pass."""
    base = base or _SHARED_BASE
    out = []
    if lo <= 2 < hi:
        out.append(np.array([2], dtype=np.int64))
    start = max(lo, 3)
    if start % 2 == 0:
        start += 1
    if start < hi:
        size = (hi - start + 1) // 2
        seg = np.ones(size, dtype=np.bool_)
        _mark_segment(seg, start, base.covering(hi))
        out.append(start + 2 * np.flatnonzero(seg).astype(np.int64))
    if not out:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(out)


class PrimeCursor:
    """Emits p_k, p_{k+1}, ... in order, sieving further segments on demand.

    ``start_after`` and ``next_index`` position the cursor: the first prime
    emitted is the smallest prime > ``start_after`` and it is taken to be
    p_{next_index}.  A fresh cursor starts at p_1 = 2.
    """

    def __init__(
        self,
        start_after: int = 1,
        next_index: int = 1,
        segment_size: int = DEFAULT_SEGMENT,
        mem_budget: int = DEFAULT_MEM_BUDGET,
        limit_hint: int | None = None,
        base: BasePrimes | None = None,
    ) -> None:
        if segment_size < 16:
            raise ValueError("segment_size must be at least 16")
        self.next_index = next_index
        self.segment_size = segment_size
        self.mem_budget = mem_budget
        self._base = base or _SHARED_BASE
        # window_base is the odd value of slot 0 of the active segment
        self.window_base = start_after + 1 if start_after % 2 == 0 else start_after + 2
        self.current_limit = start_after
        self.segment = np.empty(0, dtype=np.bool_)
        self._pending = np.empty(0, dtype=np.int64)
        self._pos = 0
        if start_after < 2:
            self._pending = np.array([2], dtype=np.int64)
            self.window_base = 3
        if limit_hint is not None:
            self._check_budget(limit_hint)
            self._base.covering(limit_hint)

    def _check_budget(self, limit: int) -> None:
        if limit > MAX_VALUE:
            raise SieveMemoryError(f"sieving beyond 2^63 is not supported (limit {limit})")
        need = memory_estimate(limit, self.segment_size)
        if need > self.mem_budget:
            raise SieveMemoryError(
                f"sieving to {limit} needs ~{need} bytes, budget is {self.mem_budget}"
            )

    def _fill(self) -> None:
        lo = self.window_base
        hi = lo + 2 * self.segment_size
        self._check_budget(hi)
        seg = np.ones(self.segment_size, dtype=np.bool_)
        _mark_segment(seg, lo, self._base.covering(hi))
        self.segment = seg
        self._pending = lo + 2 * np.flatnonzero(seg).astype(np.int64)
        self._pos = 0
        self.current_limit = hi - 1
        self.window_base = hi

    def next_block(self) -> np.ndarray:
        """Every remaining prime of the current segment (at least one prime)."""
        while self._pos >= self._pending.shape[0]:
            self._fill()
        block = self._pending[self._pos :]
        self._pos = self._pending.shape[0]
        self.next_index += block.shape[0]
        return block

    def next_prime(self) -> int:
        while self._pos >= self._pending.shape[0]:
            self._fill()
        p = int(self._pending[self._pos])
        self._pos += 1
        self.next_index += 1
        return p

    def take(self, count: int) -> np.ndarray:
        """The next ``count`` primes as one array."""
        parts = []
        left = count
        while left > 0:
            while self._pos >= self._pending.shape[0]:
                self._fill()
            chunk = self._pending[self._pos : self._pos + left]
            self._pos += chunk.shape[0]
            left -= chunk.shape[0]
            parts.append(chunk)
        self.next_index += count
        return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def nth_prime(n: int) -> int:
    """p_n by sieving from the start (convenience for small n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return int(PrimeCursor().take(n)[-1])


def sieve_limit_for(n_max: int) -> int:
    """A sieve bound guaranteed to reach p_{n_max + 1}, with a 1% margin."""
    if n_max < 3468:
        return SMALL_LIMIT
    from .bounds import axler_pn_upper

    return math.ceil(axler_pn_upper(n_max + 1) * 1.01)


def prefetch(cursor: PrimeCursor, depth: int = 4) -> Iterator[np.ndarray]:
    """Yield ``cursor.next_block()`` results, produced ahead on a worker thread.

    Blocks are delivered in order through a bounded queue.  The cursor must
    not be used elsewhere while the generator is alive.
    """
    q: queue.Queue = queue.Queue(maxsize=depth)
    stop = threading.Event()

    def worker() -> None:
        try:
            while not stop.is_set():
                block = cursor.next_block()
                while not stop.is_set():
                    try:
                        q.put(block, timeout=0.1)
                        break
                    except queue.Full:
                        continue
        except BaseException as exc:  # surfaced on the consumer side
            q.put(exc)

    t = threading.Thread(target=worker, daemon=True)
    t.start()
    try:
        while True:
            item = q.get()
            if isinstance(item, BaseException):
                raise item
            yield item
    finally:
        stop.set()
        t.join(timeout=5)
