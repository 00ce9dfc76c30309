"""Certified sweeps over n: threshold function, alpha envelope, tail suprema."""
from __future__ import annotations

from .checkpoint import (
    CheckpointCorruptError,
    CheckpointError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    checkpoint_load,
    checkpoint_save,
    crc32c,
)
from .engine import (
    DomainError,
    EnvelopeSummary,
    PsiResult,
    RecordChunk,
    ScaleRow,
    Scanner,
    ScanState,
    TailSup,
    UncertifiedTailError,
    XTracker,
    alpha_chunks,
    envelope_summary,
    hp_alpha_at,
    plateau_gap,
    plateau_gaps,
    plateau_scale_report,
    psi,
    scan_alpha_envelope,
    scan_psi,
    tail_sup,
    tail_sups,
    verify_interval_constancy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
