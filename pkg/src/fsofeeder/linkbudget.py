"""Per-channel OSNR at the receiver: mean profile with spectral tilt, and its
instantaneous value under fading."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, TextIO

import numpy as np

from .plan import ChannelPlan
from .seeding import derive_seed
from .turbulence import TurbulenceParams, generate_fading

REFERENCE_BANDWIDTH_GHZ = 12.5
DEFAULT_REFERENCE_SLOT = 26


class _Unlocked:
    """Marker for a sample where the coherent receiver has no lock."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNLOCKED"

    def __reduce__(self):
        return (_Unlocked, ())


UNLOCKED = _Unlocked()


@dataclass(frozen=True)
class LinkConfig:
    tx_power_total: float = 32.0  # dBm
    center_osnr: float = 20.89  # dB, 12.5 GHz reference bandwidth
    tilt_slope: float = -1.0  # dB/THz; negative -> higher frequencies worse
    link_length: float = 10.45  # km, informational

    def __post_init__(self):
        for name in ("tx_power_total", "center_osnr", "tilt_slope", "link_length"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


@dataclass(frozen=True)
class OsnrProfile:
    osnr: Mapping[int, float]
    freq_ghz: Mapping[int, int]
    reference_slot: int
    reference_bandwidth: float = field(default=REFERENCE_BANDWIDTH_GHZ)

    def __getitem__(self, slot: int) -> float:
        return self.osnr[slot]

    @property
    def slots(self) -> list[int]:
        return sorted(self.osnr)

    def shifted(self, delta_db: float) -> "OsnrProfile":
        return OsnrProfile(
            {s: v + delta_db for s, v in self.osnr.items()},
            dict(self.freq_ghz),
            self.reference_slot,
            self.reference_bandwidth,
        )


def mean_osnr_profile(
    config: LinkConfig,
    plan: ChannelPlan,
    offsets: Mapping[int, float] | None = None,
) -> OsnrProfile:
    """Linear-tilt OSNR profile anchored at the SP-QPSK reference channel.

    Per-channel ``offsets`` (dB, e.g. digitized from a measured profile) are
    added after the tilt; the result is then re-anchored so the reference
    channel still reads ``center_osnr``.
    """
    ref = plan.reference
    osnr = {}
    freqs = {}
    for ch in plan.channels:
        delta_thz = (ch.freq_ghz - ref.freq_ghz) / 1000.0
        osnr[ch.slot] = config.center_osnr + config.tilt_slope * delta_thz
        freqs[ch.slot] = ch.freq_ghz
    profile = OsnrProfile(osnr, freqs, ref.slot)
    if offsets:
        unknown = set(offsets) - set(osnr)
        if unknown:
            raise ValueError(f"offsets for slots not in plan: {sorted(unknown)}")
        profile = OsnrProfile({s: v + offsets.get(s, 0.0) for s, v in osnr.items()}, freqs, ref.slot)
        profile = calibrate_back_to_back(profile, config.center_osnr)
    return profile


def calibrate_back_to_back(profile: OsnrProfile, target_center: float) -> OsnrProfile:
    """Shift the whole profile so the reference channel reads ``target_center``.

    Mirrors the attenuator step of the back-to-back measurement: one uniform
    offset, so every pairwise difference is preserved.
    """
    if not profile.osnr:
        raise ValueError("empty OSNR profile")
    delta = target_center - profile.osnr[profile.reference_slot]
    if delta == 0:
        return profile
    return profile.shifted(delta)


def instantaneous_osnr(mean_osnr: float, intensity: float, lock_loss_threshold: float = 12.0):
    """OSNR (dB) seen at normalized received intensity, or ``UNLOCKED``.

    The receiver pre-amplifier sets the noise floor, so OSNR follows the
    received power dB for dB.
    """
    if not intensity >= 0:
        raise ValueError(f"intensity must be non-negative, got {intensity}")
    if intensity == 0:
        return UNLOCKED
    fade_db = -10.0 * math.log10(intensity)
    if fade_db >= lock_loss_threshold:
        return UNLOCKED
    return mean_osnr - fade_db


def instantaneous_osnr_array(mean_osnr: float, intensity: np.ndarray) -> np.ndarray:
    """Vectorized OSNR without lock handling (callers apply their own lock mask)."""
    intensity = np.asarray(intensity, dtype=float)
    if np.any(intensity < 0):
        raise ValueError("intensity must be non-negative")
    with np.errstate(divide="ignore"):
        return mean_osnr + 10.0 * np.log10(intensity)


def simulate_osa_sweeps(
    profile: OsnrProfile,
    params: TurbulenceParams,
    n_sweeps: int = 50,
    seed: int = 0,
    sweep_time: float = 1000.0,
) -> list[dict[int, float]]:
    """OSNR snapshots from repeated OSA sweeps over a fading link.

    Each sweep lasts ``sweep_time`` ms and visits channels in frequency order,
    integrating the received power over its share of the sweep. Sweeps are
    independent realizations (the OSA needs about a second per sweep, much
    longer than the coherence time).
    """
    slots = sorted(profile.slots, key=lambda s: profile.freq_ghz[s])
    sweeps = []
    for k in range(n_sweeps):
        fading = generate_fading(params, sweep_time, derive_seed(seed, k))
        windows = np.array_split(fading.samples, len(slots))
        sweeps.append(
            {slot: profile[slot] + 10.0 * math.log10(float(w.mean())) for slot, w in zip(slots, windows)}
        )
    return sweeps


def read_offsets_csv(stream: TextIO) -> dict[int, float]:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != ["slot", "osnr_offset_db"]:
        raise ValueError(f"offset CSV header must be slot,osnr_offset_db, got {header}")
    offsets = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            offsets[int(row[0])] = float(row[1])
        except (ValueError, IndexError):
            raise ValueError(f"line {lineno}: malformed offset row {row}") from None
    return offsets


def write_profile_csv(profile: OsnrProfile, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["slot", "freq_ghz", "osnr_db"])
    for slot in profile.slots:
        writer.writerow([slot, profile.freq_ghz[slot], repr(float(profile[slot]))])


def read_profile_csv(stream: TextIO, reference_slot: int | None = None) -> OsnrProfile:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != ["slot", "freq_ghz", "osnr_db"]:
        raise ValueError(f"OSNR profile header must be slot,freq_ghz,osnr_db, got {header}")
    osnr, freqs = {}, {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            slot = int(row[0])
            freqs[slot] = int(row[1])
            osnr[slot] = float(row[2])
        except (ValueError, IndexError):
            raise ValueError(f"line {lineno}: malformed profile row {row}") from None
    if not osnr:
        raise ValueError("empty OSNR profile")
    if reference_slot is None:
        reference_slot = DEFAULT_REFERENCE_SLOT if DEFAULT_REFERENCE_SLOT in osnr else min(osnr)
    return OsnrProfile(osnr, freqs, reference_slot)
