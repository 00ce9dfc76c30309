from __future__ import annotations

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from bonse_lab.counters import LOG_THRESHOLDS, CountingCursor, brute_counts, pi_log, pi_small
from bonse_lab.sieve import simple_sieve

from oracles import pi_exact, pi_log_exact, primes_by_trial


def test_log_thresholds_are_exp_ceilings():
    with mp.workdps(60):
        for q, t in zip(primes_by_trial(10), LOG_THRESHOLDS):
            assert t == int(mp.ceil(mp.e**q))
    assert LOG_THRESHOLDS[:8] == (8, 21, 149, 1097, 59875, 442414, 24154953, 178482301)


@pytest.mark.parametrize("n", [1, 7, 8, 20, 21, 148, 149, 1096, 1097, 59874, 59875, 442414])
def test_pi_log_at_threshold_edges(n):
    assert pi_log(n) == pi_log_exact(n)


def test_pi_small():
    assert pi_small(0) == 0
    assert pi_small(2) == 1
    assert pi_small(2.9999) == 1
    assert pi_small(99.5) == 25
    with pytest.raises(ValueError):
        pi_small(100)


def test_cursor_matches_brute_force_walk():
    primes = simple_sieve(200_000)
    small = primes_by_trial(3000)
    cur = CountingCursor.at(8)
    assert cur.counts() == (4, 1, 2)
    for _ in range(20_000):
        cur.advance()
        if cur.n % 997 == 0 or cur.n < 200:
            pi_n = pi_exact(cur.n, small)
            assert cur.counts() == (pi_n, pi_log_exact(cur.n), pi_exact(pi_n, small))
    assert cur.counts() == brute_counts(cur.n, primes)


def test_known_counts():
    assert CountingCursor.at(10).counts() == (4, 1, 2)
    assert CountingCursor.at(11).counts() == (5, 1, 3)
    with pytest.raises(ValueError):
        CountingCursor.at(7)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(8, 100_000), steps=st.integers(0, 300))
def test_resume_agrees_with_fresh_cursor(n, steps):
    primes = simple_sieve(200_000)
    c = CountingCursor.resume(n, *brute_counts(n, primes))
    for _ in range(steps):
        c.advance()
    assert c.counts() == brute_counts(n + steps, primes)
