"""Deterministic random-stream derivation.

All randomness flows through counter-based Philox generators whose keys are
derived by hashing a tuple of integers/strings.  This makes every sampled
dataset a pure function of ``(base_seed, sweep point, trial index, stream
tag)`` and keeps results bit-identical regardless of thread count or the
order in which work is scheduled.

Layering used by the sweep engine:

    base seed  ->  point key   (mix with the point's m, n values, so adding
                                sweep points never perturbs existing ones)
    point key  ->  stream      (one Philox stream per stream tag)
    stream     ->  trial row   (trial ``t`` owns the t-th 4-aligned row of
                                the stream; Philox counters tick 4 doubles)
"""

from __future__ import annotations

import hashlib

import numpy as np

# One Philox counter increment produces four 64-bit outputs, i.e. four
# uniform doubles; per-trial rows are padded to multiples of 4 so that any
# chunking of trials lands on counter boundaries.
_OUTPUTS_PER_TICK = 4


def derive_key(*parts: int | str) -> np.ndarray:
    """Hash a mixing tuple into a 128-bit Philox key (2 uint64 words)."""
    h = hashlib.sha256()
    for p in parts:
        h.update(str(p).encode("utf8"))
        h.update(b"\x1f")
    digest = h.digest()
    return np.frombuffer(digest[:16], dtype=np.uint64).copy()


def generator(*parts: int | str) -> np.random.Generator:
    """Fresh Generator for the stream named by the mixing tuple."""
    return np.random.Generator(np.random.Philox(key=derive_key(*parts)))


def _row_stride(row_len: int) -> int:
    return max(_OUTPUTS_PER_TICK, -(-row_len // _OUTPUTS_PER_TICK) * _OUTPUTS_PER_TICK)


def uniform_rows(key: np.ndarray, first_row: int, n_rows: int, row_len: int) -> np.ndarray:
    """Rows ``first_row .. first_row+n_rows-1`` of a keyed uniform table.

    Row ``t`` is a fixed function of ``(key, t, row_len)``: the table may be
    materialized in any chunking and always yields the same bits.
    """
    if row_len == 0 or n_rows == 0:
        return np.zeros((n_rows, row_len))
    stride = _row_stride(row_len)
    bitgen = np.random.Philox(key=key)
    if first_row:
        bitgen.advance(first_row * (stride // _OUTPUTS_PER_TICK))
    u = np.random.Generator(bitgen).random(n_rows * stride)
    return u.reshape(n_rows, stride)[:, :row_len]
