"""Compiled inner loop of the scan: one step per index n."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..certified import affine_core, affine_eval, log_radius, sign_code, theta_step

# integer state slots
I_N, I_PN, I_PNEXT, I_COUNT, I_PI, I_PILOG, I_PIPI, I_MAIN, I_S2, I_S3, I_REC, I_XIDX = range(12)
N_ISTATE = 12
# float state slots
F_HI, F_LO, F_RAD, F_L, F_RL = range(5)
N_FSTATE = 5

DONE, NEED_MAIN, NEED_S2, NEED_S3, REC_FULL, INDETERMINATE = range(6)


@njit(cache=True)
def run(ist, fst, main, s2, s3, thresholds, stop_at,
        xs, xerr, last_np, override_n, override,
        rec_on, rec_a, rec_ra, rec_b, rec_rb):
    """Evaluate every index n < stop_at, advancing the state one prime at a time.

    Returns a status code; on any early return the state is consistent and
    the call can simply be repeated once the reason has been dealt with.
    """
    n = ist[I_N]
    p_n = ist[I_PN]
    p_next = ist[I_PNEXT]
    count = ist[I_COUNT]
    pi_n = ist[I_PI]
    pi_log = ist[I_PILOG]
    pi_pi = ist[I_PIPI]
    i_main = ist[I_MAIN]
    i_s2 = ist[I_S2]
    i_s3 = ist[I_S3]
    rec = ist[I_REC]
    hi = fst[F_HI]
    lo = fst[F_LO]
    rad = fst[F_RAD]
    L = fst[F_L]
    rL = fst[F_RL]
    nx = xs.shape[0]
    code = DONE
    while n < stop_at:
        if i_main >= main.shape[0]:
            code = NEED_MAIN
            break
        if i_s2 >= s2.shape[0]:
            code = NEED_S2
            break
        if i_s3 >= s3.shape[0]:
            code = NEED_S3
            break
        if rec_on and rec >= rec_a.shape[0]:
            code = REC_FULL
            break
        a, ra, b, rb = affine_core(hi, lo, rad, n, pi_n, pi_log, pi_pi, L, rL)
        stuck = -1
        for j in range(nx):
            if n == override_n and override[j] != 0:
                s = override[j]
            else:
                e, r = affine_eval(a, ra, b, rb, xs[j], xerr[j])
                s = sign_code(e, r)
            if s == 0:
                stuck = j
                break
            if s < 0:
                last_np[j] = n
        if stuck >= 0:
            ist[I_XIDX] = stuck
            code = INDETERMINATE
            break
        if rec_on:
            rec_a[rec] = a
            rec_ra[rec] = ra
            rec_b[rec] = b
            rec_rb[rec] = rb
            rec += 1
        # n -> n + 1
        hi, lo, rad = theta_step(hi, lo, rad, L, rL)
        count += 1
        p_n = p_next
        p_next = main[i_main]
        i_main += 1
        L = math.log(p_next)
        rL = log_radius(L)
        n += 1
        if n == s2[i_s2]:
            pi_n += 1
            i_s2 += 1
            if pi_n == s3[i_s3]:
                pi_pi += 1
                i_s3 += 1
        if n >= thresholds[pi_log]:
            pi_log += 1
    ist[I_N] = n
    ist[I_PN] = p_n
    ist[I_PNEXT] = p_next
    ist[I_COUNT] = count
    ist[I_PI] = pi_n
    ist[I_PILOG] = pi_log
    ist[I_PIPI] = pi_pi
    ist[I_MAIN] = i_main
    ist[I_S2] = i_s2
    ist[I_S3] = i_s3
    ist[I_REC] = rec
    fst[F_HI] = hi
    fst[F_LO] = lo
    fst[F_RAD] = rad
    fst[F_L] = L
    fst[F_RL] = rL
    return code


def empty_records() -> tuple[np.ndarray, ...]:
    z = np.empty(0, dtype=np.float64)
    return z, z, z, z
