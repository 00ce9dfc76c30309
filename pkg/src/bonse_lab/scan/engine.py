"""Sequential certified sweep over n = 8, 9, ... and the analyses built on it."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from ..bounds import DEFAULT_CONSTANTS, EffectiveConstants, n_upper, n_upper_for_alpha, tail_alpha_bound
from ..certified import CertifiedReal, HPTheta, ThetaAccumulator, cert_log, log_radius
from ..counters import LOG_THRESHOLDS_I64, brute_counts, pi_log
from ..error_term import AlphaRecord, HPValue, alpha_arrays, hp_alpha, hp_coeffs, hp_e_n, x_float
from ..sieve import DEFAULT_MEM_BUDGET, DEFAULT_SEGMENT, PrimeCursor, prefetch
from . import kernel as K
from .checkpoint import checkpoint_load, checkpoint_save

log = logging.getLogger(__name__)

N_START = 8
SNAPSHOT_EVERY = 1_000_000
RECORD_CHUNK = 1 << 16
DEFAULT_N_MAX = 10**9
_FIRST_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23)


class DomainError(ValueError):
    """x lies outside the interval where the threshold function is finite."""


class UncertifiedTailError(RuntimeError):
    """A tail supremum could not be certified within the scan cap."""


@dataclass
class XTracker:
    x: Fraction
    last_nonpositive: int | None = None
    indeterminate_ns: list[int] = field(default_factory=list, compare=False)


@dataclass
class ScanState:
    """Everything needed to continue a scan from index n."""

    n: int
    p_n: int
    p_next: int
    theta: ThetaAccumulator
    pi_n: int
    pi_log_n: int
    pi_pi_n: int
    trackers: list[XTracker] = field(default_factory=list)
    hp: HPTheta | None = None

    @classmethod
    def fresh(cls, xs: Iterable[Fraction] = ()) -> ScanState:
        theta = ThetaAccumulator()
        for p in _FIRST_PRIMES[:N_START]:
            theta.add(cert_log(p))
        hp = HPTheta.zero().add_primes(np.array(_FIRST_PRIMES[:N_START], dtype=np.int64))
        return cls(
            n=N_START, p_n=19, p_next=23, theta=theta,
            pi_n=4, pi_log_n=pi_log(N_START), pi_pi_n=2,
            trackers=[XTracker(Fraction(x)) for x in xs], hp=hp,
        )

    def counts(self) -> tuple[int, int, int]:
        return self.pi_n, self.pi_log_n, self.pi_pi_n


@dataclass(frozen=True)
class PsiResult:
    x: Fraction
    psi: int
    last_nonpositive: int | None
    n_upper_used: int
    indeterminate_ns: tuple[int, ...] = ()
    certified: bool = True

    def __post_init__(self) -> None:
        expect = N_START if self.last_nonpositive is None else self.last_nonpositive + 1
        if self.psi != expect or self.psi < N_START:
            raise ValueError("psi must equal last_nonpositive + 1 (or 8)")


@dataclass
class RecordChunk:
    """Affine coefficients for the consecutive indices n0, n0 + 1, ..."""

    n0: int
    a: np.ndarray
    ra: np.ndarray
    b: np.ndarray
    rb: np.ndarray

    def __len__(self) -> int:
        return self.a.shape[0]

    @property
    def ns(self) -> np.ndarray:
        return np.arange(self.n0, self.n0 + len(self), dtype=np.int64)

    def alphas(self) -> tuple[np.ndarray, np.ndarray]:
        return alpha_arrays(self.a, self.ra, self.b, self.rb)

    def records(self) -> Iterator[AlphaRecord]:
        lo, hi = self.alphas()
        for i in range(len(self)):
            yield AlphaRecord(
                self.n0 + i,
                CertifiedReal(float(self.a[i]), float(self.ra[i])),
                CertifiedReal(float(self.b[i]), float(self.rb[i])),
                float(lo[i]), float(hi[i]),
            )


class Scanner:
    """Drives the compiled kernel over one sequential pass.

    Keeps the float state, the three prime streams (p_{n+1}, primes > n,
    primes > pi(n)) and a 256-bit theta snapshot refreshed every
    ``snapshot_every`` steps, used to settle undecided signs.
    """

    def __init__(
        self,
        state: ScanState,
        *,
        segment_size: int = DEFAULT_SEGMENT,
        mem_budget: int = DEFAULT_MEM_BUDGET,
        snapshot_every: int = SNAPSHOT_EVERY,
        checkpoint_path: str | Path | None = None,
        report_every: int | None = None,
        threaded: bool = True,
    ) -> None:
        if state.n < N_START:
            raise ValueError("scan states start at n = 8")
        self.trackers = state.trackers
        self.snapshot_every = snapshot_every
        self.checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        self.report_every = report_every
        self.ist = np.zeros(K.N_ISTATE, dtype=np.int64)
        self.fst = np.zeros(K.N_FSTATE, dtype=np.float64)
        ist, fst = self.ist, self.fst
        ist[K.I_N] = state.n
        ist[K.I_PN] = state.p_n
        ist[K.I_PNEXT] = state.p_next
        ist[K.I_COUNT] = state.theta.count
        ist[K.I_PI], ist[K.I_PILOG], ist[K.I_PIPI] = state.counts()
        fst[K.F_HI], fst[K.F_LO], fst[K.F_RAD] = state.theta.hi, state.theta.lo, state.theta.radius
        fst[K.F_L] = math.log(state.p_next)
        fst[K.F_RL] = log_radius(fst[K.F_L])
        kw = dict(segment_size=segment_size, mem_budget=mem_budget)
        self._main_cursor = PrimeCursor(start_after=state.p_next, next_index=state.n + 2, **kw)
        self._s2_cursor = PrimeCursor(start_after=state.n, next_index=state.pi_n + 1, **kw)
        self._s3_cursor = PrimeCursor(start_after=state.pi_n, next_index=state.pi_pi_n + 1, **kw)
        self._main_iter = prefetch(self._main_cursor) if threaded else None
        empty = np.empty(0, dtype=np.int64)
        self.main, self.s2, self.s3 = empty, empty, empty
        self.xs = np.array([x_float(t.x)[0] for t in self.trackers], dtype=np.float64)
        self.xerr = np.array([x_float(t.x)[1] for t in self.trackers], dtype=np.float64)
        self.last_np = np.array(
            [-1 if t.last_nonpositive is None else t.last_nonpositive for t in self.trackers],
            dtype=np.int64,
        )
        self.override = np.zeros(len(self.trackers), dtype=np.int64)
        self.override_n = -1
        if state.hp is None:
            state.hp = _hp_theta_from_scratch(state.n)
        if state.hp.count != state.n:
            raise ValueError("high-precision snapshot does not match the scan index")
        self.hp = state.hp.copy()
        self._pending: list[np.ndarray] = []
        self._next_snapshot = (state.n // snapshot_every + 1) * snapshot_every
        self._last_report = state.n
        self._t0 = time.perf_counter()

    @property
    def n(self) -> int:
        return int(self.ist[K.I_N])

    def close(self) -> None:
        if self._main_iter is not None:
            self._main_iter.close()
            self._main_iter = None

    def __enter__(self) -> Scanner:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _refill_main(self) -> None:
        if self._main_iter is not None:
            self.main = next(self._main_iter)
        else:
            self.main = self._main_cursor.next_block()
        self.ist[K.I_MAIN] = 0

    def _note_added(self, n_before: int, p_next_before: int, i_main_before: int) -> None:
        added = self.n - n_before
        if added <= 0:
            return
        self._pending.append(np.array([p_next_before], dtype=np.int64))
        if added > 1:
            self._pending.append(self.main[i_main_before : i_main_before + added - 1])

    def _fold(self) -> None:
        if self._pending:
            self.hp.add_primes(np.concatenate(self._pending))
            self._pending = []

    def _hp_theta_now(self) -> HPTheta:
        hp = self.hp.copy()
        if self._pending:
            hp.add_primes(np.concatenate(self._pending))
        return hp

    def _escalate(self) -> None:
        n = self.n
        hp = self._hp_theta_now()
        if hp.count != n:
            raise AssertionError("escalation snapshot out of step with the scan")
        counts = (int(self.ist[K.I_PI]), int(self.ist[K.I_PILOG]), int(self.ist[K.I_PIPI]))
        a, b = hp_coeffs(hp, n, counts, int(self.ist[K.I_PNEXT]))
        for j, t in enumerate(self.trackers):
            s = hp_e_n(a, b, t.x).sign()
            if s == 0:
                # still undecided: counted as non-positive, result uncertified
                t.indeterminate_ns.append(n)
                s = -1
            self.override[j] = s
        self.override_n = n
        log.debug("escalated sign at n=%d", n)

    def _report(self) -> None:
        if self.report_every and self.n - self._last_report >= self.report_every:
            dt = time.perf_counter() - self._t0
            log.info("n=%d  p_n=%d  %.1fs", self.n, int(self.ist[K.I_PN]), dt)
            self._last_report = self.n

    def drive(self, stop_at: int, record: bool = False) -> Iterator[RecordChunk]:
        """Evaluate every n < stop_at; yield coefficient chunks when recording."""
        rec = [np.empty(RECORD_CHUNK if record else 0) for _ in range(4)]
        rec_n0 = self.n
        self.ist[K.I_REC] = 0
        while True:
            target = min(stop_at, self._next_snapshot)
            n_before = self.n
            p_next_before = int(self.ist[K.I_PNEXT])
            i_main_before = int(self.ist[K.I_MAIN])
            code = K.run(
                self.ist, self.fst, self.main, self.s2, self.s3, LOG_THRESHOLDS_I64, target,
                self.xs, self.xerr, self.last_np, self.override_n, self.override,
                record, rec[0], rec[1], rec[2], rec[3],
            )
            self._note_added(n_before, p_next_before, i_main_before)
            if code == K.DONE:
                if self.n == self._next_snapshot:
                    self._fold()
                    self._next_snapshot += self.snapshot_every
                    if self.checkpoint_path is not None:
                        checkpoint_save(self.state(), self.checkpoint_path)
                    self._report()
                if self.n >= stop_at:
                    break
            elif code == K.NEED_MAIN:
                self._refill_main()
            elif code == K.NEED_S2:
                self.s2 = self._s2_cursor.next_block()
                self.ist[K.I_S2] = 0
            elif code == K.NEED_S3:
                self.s3 = self._s3_cursor.next_block()
                self.ist[K.I_S3] = 0
            elif code == K.REC_FULL:
                yield RecordChunk(rec_n0, *(r.copy() for r in rec))
                rec_n0 = self.n
                self.ist[K.I_REC] = 0
            elif code == K.INDETERMINATE:
                self._escalate()
            else:
                raise RuntimeError(f"unexpected kernel status {code}")
        if record and self.ist[K.I_REC]:
            k = int(self.ist[K.I_REC])
            yield RecordChunk(rec_n0, *(r[:k].copy() for r in rec))
            self.ist[K.I_REC] = 0

    def advance(self, stop_at: int) -> None:
        for _ in self.drive(stop_at, record=False):
            pass

    def state(self) -> ScanState:
        """A consistent snapshot (the 256-bit theta is brought up to n)."""
        self._fold()
        ist, fst = self.ist, self.fst
        for j, t in enumerate(self.trackers):
            t.last_nonpositive = None if self.last_np[j] < 0 else int(self.last_np[j])
        return ScanState(
            n=int(ist[K.I_N]), p_n=int(ist[K.I_PN]), p_next=int(ist[K.I_PNEXT]),
            theta=ThetaAccumulator(float(fst[K.F_HI]), float(fst[K.F_LO]), float(fst[K.F_RAD]),
                                   int(ist[K.I_COUNT])),
            pi_n=int(ist[K.I_PI]), pi_log_n=int(ist[K.I_PILOG]), pi_pi_n=int(ist[K.I_PIPI]),
            trackers=[XTracker(t.x, t.last_nonpositive, list(t.indeterminate_ns)) for t in self.trackers],
            hp=self.hp.copy(),
        )


def _hp_theta_from_scratch(n: int) -> HPTheta:
    hp = HPTheta.zero()
    cur = PrimeCursor()
    left = n
    while left:
        block = cur.take(min(left, 1 << 20))
        hp.add_primes(block)
        left -= block.shape[0]
    return hp


# --- threshold function ---------------------------------------------------------


def _as_x(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("x must be exact (Fraction, int or decimal string), not float")
    if isinstance(x, str):
        from ..error_term import parse_rational

        return parse_rational(x)
    return Fraction(x)


def scan_psi(
    xs: Sequence,
    n_ceiling: int | None = None,
    *,
    constants: EffectiveConstants = DEFAULT_CONSTANTS,
    checkpoint: str | Path | None = None,
    resume: bool = False,
    mem_budget: int = DEFAULT_MEM_BUDGET,
    report_every: int | None = None,
    snapshot_every: int = SNAPSHOT_EVERY,
    on_progress: Callable[[Scanner], None] | None = None,
) -> list[PsiResult]:
    """Psi(x) for every x in ``xs`` from one shared pass.

    Values x >= 2 are answered (Psi = 8) without scanning.  The pass runs to
    the largest certified ceiling n_upper(x) or to ``n_ceiling`` when given;
    a result is certified only if its own n_upper(x) was reached and no sign
    stayed undecided after escalation.
    """
    if not xs:
        raise ValueError("xs must be non-empty")
    exact = [_as_x(x) for x in xs]
    for x in exact:
        if x <= -2:
            raise DomainError(f"x = {x} is outside (-2, 2): Psi is infinite for x <= -2")
    scan_xs = sorted({x for x in exact if x < 2})
    results: dict[Fraction, PsiResult] = {}
    for x in exact:
        if x >= 2:
            results[x] = PsiResult(x, N_START, None, N_START)
    if scan_xs:
        uppers = {x: n_upper(x, constants) for x in scan_xs}
        top = max(uppers.values())
        stop = top if n_ceiling is None else n_ceiling
        if stop < N_START:
            raise ValueError("n_ceiling must be >= 8")
        state = None
        if resume and checkpoint is not None and Path(checkpoint).exists():
            state = checkpoint_load(checkpoint)
            if sorted(t.x for t in state.trackers) != scan_xs:
                raise ValueError("checkpoint was written for a different set of x values")
            by_x = {t.x: t for t in state.trackers}
            state.trackers = [by_x[x] for x in scan_xs]
            if state.n > stop + 1:
                raise ValueError("checkpoint is already past the requested ceiling")
        if state is None:
            state = ScanState.fresh(scan_xs)
        with Scanner(state, mem_budget=mem_budget, checkpoint_path=checkpoint,
                     report_every=report_every, snapshot_every=snapshot_every) as sc:
            sc.advance(stop + 1)
            final = sc.state()
        reached = final.n - 1
        for t in final.trackers:
            used = min(uppers[t.x], reached)
            last = t.last_nonpositive
            results[t.x] = PsiResult(
                x=t.x,
                psi=N_START if last is None else last + 1,
                last_nonpositive=last,
                n_upper_used=used,
                indeterminate_ns=tuple(t.indeterminate_ns),
                certified=not t.indeterminate_ns and reached >= uppers[t.x],
            )
    return [results[x] for x in exact]


def psi(x, **kw) -> PsiResult:
    return scan_psi([x], **kw)[0]


def verify_interval_constancy(a, b, **kw) -> bool:
    """Psi is non-increasing, so it is constant on [a, b] iff Psi(a) == Psi(b)."""
    a, b = _as_x(a), _as_x(b)
    if not -2 < a <= b < 2:
        raise DomainError("need -2 < a <= b < 2")
    ra, rb = scan_psi([a, b], **kw)
    return ra.certified and rb.certified and ra.psi == rb.psi


# --- alpha envelope and tail suprema --------------------------------------------


def alpha_chunks(n_from: int, n_to: int, *, mem_budget: int = DEFAULT_MEM_BUDGET) -> Iterator[RecordChunk]:
    """Affine coefficients for n_from..n_to in consecutive chunks."""
    if not N_START <= n_from <= n_to:
        raise ValueError("need 8 <= n_from <= n_to")
    with Scanner(ScanState.fresh(), mem_budget=mem_budget, threaded=n_to > 10**6) as sc:
        sc.advance(n_from)
        yield from sc.drive(n_to + 1, record=True)


def scan_alpha_envelope(n_from: int, n_to: int, **kw) -> Iterator[AlphaRecord]:
    """One AlphaRecord per n in [n_from, n_to]."""
    for chunk in alpha_chunks(n_from, n_to, **kw):
        yield from chunk.records()


@dataclass(frozen=True)
class EnvelopeSummary:
    n_from: int
    n_to: int
    argmax_n: int
    max_alpha_lo: float
    max_alpha_hi: float


def envelope_summary(n_from: int, n_to: int, **kw) -> EnvelopeSummary:
    best_hi, best_lo, arg = -math.inf, -math.inf, n_from
    for chunk in alpha_chunks(n_from, n_to, **kw):
        lo, hi = chunk.alphas()
        i = int(np.argmax(hi))
        if hi[i] > best_hi:
            best_hi, arg = float(hi[i]), chunk.n0 + i
        best_lo = max(best_lo, float(lo.max()))
    return EnvelopeSummary(n_from, n_to, arg, best_lo, best_hi)


@dataclass(frozen=True)
class TailSup:
    """Enclosure [lo, hi] of A_m = sup_{n >= m} alpha_n."""

    m: int
    lo: float
    hi: float
    argmax_n: int
    n_reached: int
    certified: bool

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)


def tail_sups(
    ms: Sequence[int],
    scan_to: int | None = None,
    *,
    n_max: int = DEFAULT_N_MAX,
    constants: EffectiveConstants = DEFAULT_CONSTANTS,
    mem_budget: int = DEFAULT_MEM_BUDGET,
) -> list[TailSup]:
    """A_m enclosures for several m from one pass.

    The pass extends until the decreasing tail bound on alpha_n (valid for
    n >= 3468) drops strictly below every running maximum, or until n_max.
    """
    ms = sorted(set(int(m) for m in ms))
    if not ms or ms[0] < N_START:
        raise ValueError("each m must be >= 8")
    m0 = ms[0]
    k = len(ms)
    mlo = np.full(k, -np.inf)
    mhi = np.full(k, -np.inf)
    arg = np.array(ms, dtype=np.int64)
    reached = m0 - 1
    target = max(scan_to or 0, ms[-1], constants.n_floor)

    def need() -> int | None:
        worst = float(mlo.min())
        return n_upper_for_alpha(worst, constants) if math.isfinite(worst) else None

    with Scanner(ScanState.fresh(), mem_budget=mem_budget, threaded=False) as sc:
        sc.advance(m0)
        while True:
            for chunk in sc.drive(target + 1, record=True):
                lo, hi = chunk.alphas()
                ns = chunk.ns
                for i, m in enumerate(ms):
                    sel = ns >= m
                    if not sel.any():
                        continue
                    l, h = lo[sel], hi[sel]
                    j = int(np.argmax(h))
                    if h[j] > mhi[i]:
                        mhi[i] = h[j]
                        arg[i] = ns[sel][j]
                    mlo[i] = max(mlo[i], float(l.max()))
            reached = target
            nn = need()
            if nn is not None and nn <= reached + 1:
                break
            if target >= n_max:
                break
            target = min(n_max, max(nn or 0, 2 * target))
    out = []
    for i, m in enumerate(ms):
        bound_ok = reached + 1 >= constants.n_floor and tail_alpha_bound(reached + 1, constants) < mlo[i]
        out.append(TailSup(m, float(mlo[i]), float(mhi[i]), int(arg[i]), reached, bool(bound_ok)))
    return out


def tail_sup(m: int, scan_to: int | None = None, **kw) -> TailSup:
    return tail_sups([m], scan_to, **kw)[0]


def plateau_gaps(ms: Sequence[int], **kw) -> dict[int, float]:
    """Delta_m = max(0, lower(A_m) - upper(A_{m+1})) for each m."""
    needed = sorted(set(ms) | {m + 1 for m in ms})
    sups = {t.m: t for t in tail_sups(needed, **kw)}
    out = {}
    for m in ms:
        a, b = sups[m], sups[m + 1]
        if not (a.certified and b.certified):
            raise UncertifiedTailError(f"tail suprema for m={m} or m={m + 1} not certified")
        out[m] = max(0.0, a.lo - b.hi)
    return out


def plateau_gap(m: int, **kw) -> float:
    return plateau_gaps([m], **kw)[m]


@dataclass(frozen=True)
class ScaleRow:
    m: int
    gap: float
    normalized: float


def plateau_scale_report(m_values: Sequence[int], **kw) -> list[ScaleRow]:
    """Rows (m, Delta_m, Delta_m * m * log(m)^2)."""
    gaps = plateau_gaps(m_values, **kw)
    return [ScaleRow(m, gaps[m], gaps[m] * m * math.log(m) ** 2) for m in m_values]


# --- 256-bit evaluation at a single index ----------------------------------------


def hp_alpha_at(n: int) -> HPValue:
    """alpha_n at 256 bits, theta accumulated from scratch."""
    if n < N_START:
        raise ValueError("n must be >= 8")
    primes = PrimeCursor().take(n + 1)
    hp = HPTheta.zero().add_primes(primes[:n])
    a, b = hp_coeffs(hp, n, brute_counts(n, primes), int(primes[n]))
    return hp_alpha(a, b)
