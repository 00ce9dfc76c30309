from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bonse_lab.sieve import (
    PrimeCursor,
    SieveMemoryError,
    nth_prime,
    prefetch,
    segment_primes,
    sieve_limit_for,
    simple_sieve,
)

from oracles import primes_by_trial


def test_first_primes_match_trial_division():
    assert PrimeCursor().take(2000).tolist() == list(primes_by_trial(2000))


def test_simple_sieve_small_limits():
    assert simple_sieve(1).tolist() == []
    assert simple_sieve(2).tolist() == [2]
    assert simple_sieve(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_nth_prime_known_values():
    assert nth_prime(1) == 2
    assert nth_prime(3468) == 32327
    assert nth_prime(10**5) == 1_299_709
    assert nth_prime(10**6) == 15_485_863


def test_tiny_segments_cross_boundaries():
    a = PrimeCursor(segment_size=16).take(500)
    assert a.tolist() == list(primes_by_trial(500))


def test_cursor_positioned_mid_stream():
    ps = primes_by_trial(1200)
    cur = PrimeCursor(start_after=ps[999], next_index=1001)
    assert cur.next_prime() == ps[1000]
    assert cur.next_index == 1002
    # starting between primes
    cur = PrimeCursor(start_after=ps[999] + 1)
    assert cur.next_prime() == ps[1000]


def test_next_block_concatenation_is_the_prime_sequence():
    cur = PrimeCursor(segment_size=64)
    got = []
    while len(got) < 3000:
        got.extend(cur.next_block().tolist())
    assert got[:3000] == list(primes_by_trial(3000))
    assert cur.next_index == len(got) + 1


def test_prefetch_yields_in_order():
    gen = prefetch(PrimeCursor(segment_size=64), depth=2)
    got = []
    for block in gen:
        got.extend(block.tolist())
        if len(got) >= 1000:
            break
    gen.close()
    assert got[:1000] == list(primes_by_trial(1000))


def test_memory_budget_enforced():
    with pytest.raises(SieveMemoryError):
        PrimeCursor(mem_budget=1000, limit_hint=10**12)
    cur = PrimeCursor(mem_budget=1 << 12, segment_size=1 << 14)
    with pytest.raises(SieveMemoryError):
        cur.take(10)


def test_sieve_limit_reaches_next_prime():
    for n in (3468, 10**5, 10**6, 43_565_840):
        lim = sieve_limit_for(n)
        if n <= 10**6:
            assert lim >= nth_prime(n + 1)
    assert sieve_limit_for(100) == 40_000
    # p_{43565841} is about 8.5e8; the bound sits within a few percent of it
    lim = sieve_limit_for(43_565_840)
    assert 8.4e8 < lim < 9.0e8


@settings(max_examples=60, deadline=None)
@given(lo=st.integers(0, 200_000), width=st.integers(0, 5000))
def test_segment_primes_matches_plain_sieve(lo, width):
    ref = simple_sieve(lo + width)
    expect = ref[(ref >= lo) & (ref < lo + width)]
    assert np.array_equal(segment_primes(lo, lo + width), expect)
