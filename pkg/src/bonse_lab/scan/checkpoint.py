"""Binary checkpoint files for resumable scans.

Layout (little-endian)::

    magic       8 bytes  b"BNSESCAN"
    version     u32
    n, p_n, p_next                    u64 x 3
    theta hi, theta lo, theta radius  f64 x 3
    count                             u64
    pi(n), pi(log n), pi(pi(n))       u64 x 3
    tracker count                     u64
      per tracker: x numerator i64, x denominator u64, last non-positive n i64 (-1: none)
    snapshot length                   u32, then that many bytes: decimal theta(p_n) at
                                      256 bits, or length 0 when absent
    CRC-32C of all preceding bytes    u32
"""
from __future__ import annotations

import os
import struct
from fractions import Fraction
from pathlib import Path

from ..certified import HPTheta, ThetaAccumulator

MAGIC = b"BNSESCAN"
VERSION = 1

_HEAD = struct.Struct("<8sI")
_CORE = struct.Struct("<QQQdddQQQQQ")
_TRACKER = struct.Struct("<qQq")
_U32 = struct.Struct("<I")


class CheckpointError(Exception):
    """Base class for unreadable checkpoint files."""


class CheckpointTruncatedError(CheckpointError):
    pass


class CheckpointCorruptError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


def _crc32c_table() -> list[int]:
    table = []
    for i in range(256):
        c = i
        for _ in range(8):
            c = (c >> 1) ^ 0x82F63B78 if c & 1 else c >> 1
        table.append(c)
    return table


_CRC_TABLE = _crc32c_table()


def crc32c(data: bytes, crc: int = 0) -> int:
    """CRC-32C (Castagnoli), as used by iSCSI and ext4."""
    crc ^= 0xFFFFFFFF
    table = _CRC_TABLE
    for byte in data:
        crc = table[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFF


def encode(state) -> bytes:
    parts = [_HEAD.pack(MAGIC, VERSION)]
    th = state.theta
    parts.append(_CORE.pack(state.n, state.p_n, state.p_next, th.hi, th.lo, th.radius, th.count,
                            state.pi_n, state.pi_log_n, state.pi_pi_n, len(state.trackers)))
    for t in state.trackers:
        last = -1 if t.last_nonpositive is None else t.last_nonpositive
        parts.append(_TRACKER.pack(t.x.numerator, t.x.denominator, last))
    snap = b""
    if state.hp is not None:
        if state.hp.count != state.n:
            raise ValueError("high-precision snapshot must be taken at the current index")
        snap = state.hp.to_string().encode("ascii")
    parts.append(_U32.pack(len(snap)))
    parts.append(snap)
    body = b"".join(parts)
    return body + _U32.pack(crc32c(body))


def decode(data: bytes):
    from .engine import ScanState, XTracker

    if len(data) < _HEAD.size:
        raise CheckpointTruncatedError(f"checkpoint has only {len(data)} bytes")
    magic, version = _HEAD.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointCorruptError("bad magic bytes")
    if version != VERSION:
        raise CheckpointVersionError(f"checkpoint version {version}, expected {VERSION}")
    pos = _HEAD.size
    need = pos + _CORE.size
    if len(data) < need + _U32.size:
        raise CheckpointTruncatedError("checkpoint ends inside the state block")
    (n, p_n, p_next, hi, lo, radius, count, pi_n, pi_log_n, pi_pi_n,
     n_trackers) = _CORE.unpack_from(data, pos)
    pos = need
    if n_trackers > (len(data) - pos) // _TRACKER.size:
        # a huge count is either a cut-off file or garbage; the CRC decides
        if len(data) >= pos + _U32.size and _crc_ok(data):
            raise CheckpointCorruptError("tracker count exceeds file size")
        raise CheckpointTruncatedError("checkpoint ends inside the tracker table")
    trackers = []
    for _ in range(n_trackers):
        num, den, last = _TRACKER.unpack_from(data, pos)
        pos += _TRACKER.size
        if den == 0:
            raise CheckpointCorruptError("zero denominator in tracker")
        trackers.append(XTracker(Fraction(num, den), None if last < 0 else last))
    if len(data) < pos + _U32.size:
        raise CheckpointTruncatedError("checkpoint ends before the snapshot length")
    (snap_len,) = _U32.unpack_from(data, pos)
    pos += _U32.size
    if len(data) < pos + snap_len + _U32.size:
        raise CheckpointTruncatedError("checkpoint ends inside the snapshot")
    snap = data[pos : pos + snap_len]
    pos += snap_len
    if not _crc_ok(data[: pos + _U32.size]) or len(data) != pos + _U32.size:
        if len(data) != pos + _U32.size and _crc_ok(data[: pos + _U32.size]):
            raise CheckpointCorruptError("trailing bytes after checksum")
        raise CheckpointCorruptError("checksum mismatch")
    hp = None
    if snap_len:
        try:
            hp = HPTheta.from_string(snap.decode("ascii"), count)
        except ValueError as exc:
            raise CheckpointCorruptError(f"unreadable snapshot: {exc}") from exc
    theta = ThetaAccumulator(hi, lo, radius, count)
    return ScanState(n=n, p_n=p_n, p_next=p_next, theta=theta, pi_n=pi_n, pi_log_n=pi_log_n,
                     pi_pi_n=pi_pi_n, trackers=trackers, hp=hp)


def _crc_ok(chunk: bytes) -> bool:
    body, tail = chunk[:-4], chunk[-4:]
    return _U32.pack(crc32c(body)) == tail


def checkpoint_save(state, path: str | os.PathLike) -> Path:
    """Write atomically (temp file + rename)."""
    path = Path(path)
    data = encode(state)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return path


def checkpoint_load(path: str | os.PathLike):
    with open(path, "rb") as fh:
        return decode(fh.read())
