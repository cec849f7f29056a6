"""Temporally correlated log-normal scintillation.

The log-intensity is a stationary first-order Gauss-Markov process
(autocorrelation ``exp(-lag / coherence_time)``) scaled so that the
normalized intensity has unit mean and the requested scintillation index.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import TextIO

import numpy as np
from scipy.signal import lfilter


@dataclass(frozen=True)
class TurbulenceParams:
    """Scintillation strength, temporal scale, and receiver-lock knobs.

    ``lock_loss_threshold`` is the fade depth (dB below mean) at which the
    coherent receiver drops lock; after the fade recovers it stays unlocked
    for ``relock_time``. Both are consumed when intervals are accumulated.
    """

    scintillation_index: float = 0.1
    coherence_time: float = 2.0  # ms
    sample_interval: float = 0.1  # ms
    lock_loss_threshold: float = 12.0  # dB
    relock_time: float = 2.0  # ms

    def __post_init__(self):
        for name in ("scintillation_index", "coherence_time", "sample_interval", "lock_loss_threshold", "relock_time"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if self.coherence_time <= 0 or self.sample_interval <= 0:
            raise ValueError("coherence_time and sample_interval must be positive")
        if self.sample_interval > self.coherence_time / 5 + 1e-12:
            raise ValueError("sample_interval must not exceed coherence_time / 5")

    @property
    def log_variance(self) -> float:
        return math.log1p(self.scintillation_index)


@dataclass(frozen=True)
class FadingSeries:
    samples: np.ndarray
    sample_interval: float
    params: TurbulenceParams | None = None
    seed: int | None = None

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError("fading samples must be one-dimensional")
        if np.any(samples < 0) or not np.all(np.isfinite(samples)):
            raise ValueError("fading samples must be finite and non-negative")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) * self.sample_interval

    @property
    def times_ms(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.sample_interval


def _n_samples(duration: float, sample_interval: float) -> int:
    return int(math.floor(duration / sample_interval + 1e-9))


def gauss_markov(n: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance stationary AR(1) sequence with lag-1 correlation ``rho``."""
    w = rng.standard_normal(n)
    if n == 0:
        return w
    out = np.empty(n)
    out[0] = w[0]
    if n > 1:
        gain = math.sqrt(1.0 - rho * rho)
        out[1:], _ = lfilter([gain], [1.0, -rho], w[1:], zi=[rho * w[0]])
    return out


def generate_fading(params: TurbulenceParams, duration: float, seed: int) -> FadingSeries:
    """Log-normal intensity series of ``duration`` ms; deterministic in ``seed``.

    The same seed yields the same standardized process for every
    scintillation index, so sweeping the index rescales one realization.
    """
    if not math.isfinite(duration) or duration < params.sample_interval:
        raise ValueError("duration must be at least one sample interval")
    n = _n_samples(duration, params.sample_interval)
    if params.scintillation_index == 0:
        return FadingSeries(np.ones(n), params.sample_interval, params, seed)
    rng = np.random.default_rng(seed)
    rho = math.exp(-params.sample_interval / params.coherence_time)
    z = gauss_markov(n, rho, rng)
    var = params.log_variance
    samples = np.exp(math.sqrt(var) * z - var / 2)
    return FadingSeries(samples, params.sample_interval, params, seed)


def scintillation_index(series: FadingSeries | np.ndarray) -> float:
    """Normalized intensity variance, <I^2>/<I>^2 - 1."""
    x = np.asarray(series.samples if isinstance(series, FadingSeries) else series, dtype=float)
    if x.size < 2:
        raise ValueError("scintillation index needs at least 2 samples")
    m = x.mean()
    if m == 0:
        raise ValueError("scintillation index undefined for zero mean intensity")
    return float(np.mean(x * x) / (m * m) - 1.0)


def autocorrelation_efold(series: FadingSeries, coherence_time: float | None = None) -> float:
    """Lag (ms) at which the log-intensity autocorrelation first drops below 1/e.

    The crossing is linearly interpolated between neighbouring lags.
    """
    tau = coherence_time
    if tau is None:
        if series.params is None:
            raise ValueError("coherence time unknown; pass it explicitly")
        tau = series.params.coherence_time
    if series.duration < 20 * tau:
        raise ValueError(f"series of {series.duration} ms is shorter than 20 coherence times ({20 * tau} ms)")
    with np.errstate(divide="ignore"):
        x = np.log(series.samples)
    if not np.all(np.isfinite(x)):
        raise ValueError("log-intensity undefined for zero samples")
    x = x - x.mean()
    c0 = float(np.dot(x, x))
    if c0 <= 0:
        raise ValueError("autocorrelation undefined for a constant series")
    n = x.size
    target = math.exp(-1.0)
    prev = 1.0
    for lag in range(1, n // 2):
        r = float(np.dot(x[:-lag], x[lag:])) / c0 * n / (n - lag)
        if r < target:
            frac = (prev - target) / (prev - r)
            return (lag - 1 + frac) * series.sample_interval
        prev = r
    raise ValueError("autocorrelation never fell below 1/e")


def unlocked_mask(intensity: np.ndarray, threshold_db: float, relock_time: float, sample_interval: float) -> np.ndarray:
    """Boolean receiver-unlocked state per sample.

    The receiver drops lock while the fade depth is at least ``threshold_db``
    and needs ``relock_time`` ms of recovered signal before it locks again.
    """
    intensity = np.asarray(intensity, dtype=float)
    with np.errstate(divide="ignore"):
        fade_db = -10.0 * np.log10(intensity)
    lost = fade_db >= threshold_db
    if not lost.any():
        return lost
    hold = int(round(relock_time / sample_interval))
    idx = np.arange(lost.size)
    last_lost = np.maximum.accumulate(np.where(lost, idx, -1))
    return (last_lost >= 0) & (idx - last_lost <= hold)


def write_fading_csv(series: FadingSeries, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t_ms", "intensity"])
    for t, v in zip(series.times_ms, series.samples):
        writer.writerow([repr(round(float(t), 9)), repr(float(v))])


def read_fading_csv(stream: TextIO) -> FadingSeries:
    """Load a measured or exported power vector (normalized intensity vs time)."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != ["t_ms", "intensity"]:
        raise ValueError(f"fading CSV header must be t_ms,intensity, got {header}")
    t, v = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            t.append(float(row[0]))
            v.append(float(row[1]))
        except (ValueError, IndexError):
            raise ValueError(f"line {lineno}: malformed fading row {row}") from None
    if len(t) < 2:
        raise ValueError("fading CSV needs at least two samples")
    steps = np.diff(t)
    dt = float(np.median(steps))
    if dt <= 0 or not np.allclose(steps, dt, rtol=1e-6, atol=1e-9):
        raise ValueError("fading CSV must be uniformly sampled in increasing time")
    return FadingSeries(np.array(v), dt)
