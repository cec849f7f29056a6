"""10-ms FEC interval accounting.

Sub-millisecond BER/lock samples are folded into the transponder's 10-ms
reporting intervals, which are sorted into three classes:

* ``VALID`` - no uncorrected blocks, no post-FEC errors; the pre-FEC BER counts.
* ``UNCORRECTED`` - some blocks failed; the pre-FEC BER is reported but discarded.
* ``LOST`` - the transponder reports ``nan``; nothing was received.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linkbudget import UNLOCKED
from .modem import ModemModel

INTERVAL_MS = 10.0
BER_FLOOR = 1e-8
DEFAULT_LOST_DURATION_MS = 5.0
DEFAULT_BLOCK_MS = 0.1
_DURATION_TOL = 1e-9


class IntervalClass(enum.Enum):
    VALID = "Valid"
    UNCORRECTED = "Uncorrected"
    LOST = "Lost"


class BelowFloor(float):
    """Pre-FEC BER of an interval with zero corrected errors, shown as <1e-8."""

    def __new__(cls):
        return super().__new__(cls, BER_FLOOR)

    def __repr__(self) -> str:
        return "<1e-8"

    __str__ = __repr__

    def __reduce__(self):
        return (BelowFloor, ())


BELOW_FLOOR = BelowFloor()


def is_below_floor(ber) -> bool:
    return isinstance(ber, BelowFloor)


@dataclass(frozen=True)
class SubSample:
    ber: object  # float BER or UNLOCKED
    duration: float  # ms

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("sub-sample duration must be positive")
        if self.ber is not UNLOCKED and not 0 <= self.ber <= 0.5:
            raise ValueError(f"sub-sample BER must lie in [0, 0.5], got {self.ber}")

    @property
    def unlocked(self) -> bool:
        return self.ber is UNLOCKED


@dataclass(frozen=True)
class IntervalRecord:
    t_start: float  # s
    channel_slot: int
    prefec_ber: float  # nan when lost; BELOW_FLOOR for zero errors
    uncorrected_blocks: int = 0
    postfec_errors: int = 0
    locked: bool = True
    freq_ghz: int = 0
    format: str = ""

    def __post_init__(self):
        if self.uncorrected_blocks < 0 or self.postfec_errors < 0:
            raise ValueError("block and error counts must be non-negative")

    @property
    def interval_class(self) -> IntervalClass:
        return classify(self)

    @property
    def below_floor(self) -> bool:
        return is_below_floor(self.prefec_ber)


def classify(record: IntervalRecord) -> IntervalClass:
    if math.isnan(record.prefec_ber):
        return IntervalClass.LOST
    if record.uncorrected_blocks == 0 and record.postfec_errors == 0:
        return IntervalClass.VALID
    return IntervalClass.UNCORRECTED


def bits_per_interval(gross_rate: float, interval_ms: float = INTERVAL_MS) -> int:
    """Line bits carried in one interval at ``gross_rate`` Gbit/s."""
    return int(round(gross_rate * 1e6 * interval_ms))


def quantize_ber(error_count: int, bits_in_interval: int) -> float:
    """Counted BER; zero errors return the ``BELOW_FLOOR`` sentinel."""
    if bits_in_interval <= 0:
        raise ValueError("bits_in_interval must be positive")
    if error_count < 0:
        raise ValueError("error_count must be non-negative")
    if error_count == 0:
        return BELOW_FLOOR
    return error_count / bits_in_interval


def accumulate_interval(
    sub_samples: Sequence[SubSample],
    model: ModemModel,
    gross_rate: float,
    lost_duration: float = DEFAULT_LOST_DURATION_MS,
    block_duration: float = DEFAULT_BLOCK_MS,
    *,
    t_start: float = 0.0,
    slot: int = 0,
    freq_ghz: int = 0,
) -> IntervalRecord:
    """Fold one interval's sub-samples into an ``IntervalRecord``.

    An interval is lost once the receiver was unlocked for at least
    ``lost_duration`` ms in total. Otherwise every sub-sample above the FEC
    limit (or unlocked) contributes uncorrected blocks, one per
    ``block_duration`` ms. The reported BER is the duration-weighted mean over
    the locked sub-samples, rounded to a whole number of errors.
    """
    if not sub_samples:
        raise ValueError("an interval needs at least one sub-sample")
    total = sum(s.duration for s in sub_samples)
    if abs(total - INTERVAL_MS) > _DURATION_TOL:
        raise ValueError(f"sub-sample durations sum to {total} ms, expected {INTERVAL_MS}")

    unlocked = sum(s.duration for s in sub_samples if s.unlocked)
    line_bits = gross_rate * 1e6  # bits per ms
    blocks = 0
    post_errors = 0.0
    weighted = 0.0
    locked_time = 0.0
    for s in sub_samples:
        failed = s.unlocked or s.ber > model.fec_limit
        if failed:
            blocks += max(1, int(round(s.duration / block_duration)))
            post_errors += (0.5 if s.unlocked else s.ber) * line_bits * s.duration
        if not s.unlocked:
            weighted += s.ber * s.duration
            locked_time += s.duration

    common = dict(
        t_start=t_start,
        channel_slot=slot,
        uncorrected_blocks=blocks,
        postfec_errors=int(round(post_errors)),
        locked=unlocked == 0,
        freq_ghz=freq_ghz,
        format=model.format.label,
    )
    if unlocked >= lost_duration - _DURATION_TOL or locked_time == 0:
        return IntervalRecord(prefec_ber=math.nan, **common)
    bits = bits_per_interval(gross_rate)
    errors = int(round(weighted / locked_time * bits))
    return IntervalRecord(prefec_ber=quantize_ber(errors, bits), **common)


@dataclass
class IntervalBatch:
    """Column-wise result of ``accumulate_intervals``."""

    error_count: np.ndarray  # -1 where lost
    bits: int
    uncorrected_blocks: np.ndarray
    postfec_errors: np.ndarray
    locked: np.ndarray
    lost: np.ndarray

    def __len__(self) -> int:
        return len(self.lost)

    def prefec_ber(self, i: int) -> float:
        if self.lost[i]:
            return math.nan
        return quantize_ber(int(self.error_count[i]), self.bits)

    def classes(self) -> np.ndarray:
        """Class labels as an array of ``IntervalClass`` values."""
        out = np.full(len(self), IntervalClass.VALID, dtype=object)
        out[(self.uncorrected_blocks > 0) | (self.postfec_errors > 0)] = IntervalClass.UNCORRECTED
        out[self.lost] = IntervalClass.LOST
        return out


def accumulate_intervals(
    ber: np.ndarray,
    sub_duration: float,
    model: ModemModel,
    gross_rate: float,
    lost_duration: float = DEFAULT_LOST_DURATION_MS,
    block_duration: float = DEFAULT_BLOCK_MS,
) -> IntervalBatch:
    """Vectorized ``accumulate_interval`` over equal-length sub-samples.

    ``ber`` has shape ``(n_intervals, n_sub)``; NaN marks unlocked samples.
    """
    ber = np.atleast_2d(np.asarray(ber, dtype=float))
    n_sub = ber.shape[1]
    if abs(n_sub * sub_duration - INTERVAL_MS) > 1e-6:
        raise ValueError(f"{n_sub} sub-samples of {sub_duration} ms do not make a {INTERVAL_MS} ms interval")
    unlocked = np.isnan(ber)
    n_unlocked = unlocked.sum(axis=1)
    failed = unlocked | (np.nan_to_num(ber, nan=0.0) > model.fec_limit)
    per_block = max(1, int(round(sub_duration / block_duration)))
    blocks = failed.sum(axis=1) * per_block

    line_bits = gross_rate * 1e6 * sub_duration
    post = np.where(unlocked, 0.5, np.where(failed, np.nan_to_num(ber), 0.0)).sum(axis=1) * line_bits
    n_locked = n_sub - n_unlocked
    locked_sum = np.where(unlocked, 0.0, ber).sum(axis=1)

    lost = (n_unlocked * sub_duration >= lost_duration - _DURATION_TOL) | (n_locked == 0)
    bits = bits_per_interval(gross_rate)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_ber = locked_sum * sub_duration / (n_locked * sub_duration)
    errors = np.where(lost, -1, np.rint(np.nan_to_num(mean_ber) * bits)).astype(np.int64)
    return IntervalBatch(
        error_count=errors,
        bits=bits,
        uncorrected_blocks=blocks.astype(np.int64),
        postfec_errors=np.rint(post).astype(np.int64),
        locked=n_unlocked == 0,
        lost=lost,
    )
