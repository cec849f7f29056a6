"""Measurement-campaign driver: CUT scan, dwell, readout sampling, dual-CUT runs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import fec
from .fec import IntervalRecord, accumulate_intervals
from .linkbudget import LinkConfig, OsnrProfile, mean_osnr_profile
from .modem import DEFAULT_FEC_LIMIT, DEFAULT_PENALTIES, ModemModel, ber_from_osnr
from .plan import Channel, ChannelPlan, Cut, ModulationFormat, PlanError, set_cut_format, tune_cut, validate_plan
from .seeding import DEFAULT_SEED, derive_seed
from .turbulence import TurbulenceParams, generate_fading, unlocked_mask

INTERVALS_PER_SECOND = int(round(1000 / fec.INTERVAL_MS))
_WALK_SALT = 0x5DEECE66D


def full_scan_order(plan: ChannelPlan | None = None) -> tuple[tuple[Cut, int], ...]:
    """Even CUT across every even slot, then odd CUT across every odd slot (reference skipped)."""
    ref = plan.reference.slot if plan is not None else 26
    n = len(plan) if plan is not None else 54
    even = [(Cut.EVEN, s) for s in range(0, n, 2) if s != ref]
    odd = [(Cut.ODD, s) for s in range(1, n, 2) if s != ref]
    return tuple(even + odd)


def readout_pattern(readout_rate: int) -> list[int]:
    """Interval indices kept within each second: 0, k, 2k, ... with k = 100 // rate."""
    step = INTERVALS_PER_SECOND // readout_rate
    return [i * step for i in range(readout_rate)]


@dataclass(frozen=True)
class CampaignConfig:
    dwell_per_channel: float = 120.0  # s
    readout_rate: int = 16  # intervals per second
    retune_gap: float = 300.0  # s
    scan_order: tuple[tuple[Cut, int], ...] = field(default_factory=full_scan_order)
    turbulence: TurbulenceParams = field(default_factory=TurbulenceParams)
    # "fixed", "walk", or an explicit per-step sequence of TurbulenceParams
    schedule: object = "fixed"
    walk_sigma: float = 0.3  # log-scale step of the scintillation-index walk
    walk_bounds: tuple[float, float] = (0.01, 1.0)
    lost_duration: float = fec.DEFAULT_LOST_DURATION_MS  # ms
    block_duration: float = fec.DEFAULT_BLOCK_MS  # ms
    fec_limit: float = DEFAULT_FEC_LIMIT
    penalties: Mapping[str, float] = field(default_factory=lambda: {f.label: p for f, p in DEFAULT_PENALTIES.items()})
    master_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 1 <= self.readout_rate <= INTERVALS_PER_SECOND:
            raise ValueError(f"readout_rate must lie in 1..{INTERVALS_PER_SECOND}")
        if not self.dwell_per_channel > 0 or self.retune_gap < 0:
            raise ValueError("dwell must be positive and retune gap non-negative")
        dwell_ms = self.dwell_per_channel * 1000
        if abs(dwell_ms / fec.INTERVAL_MS - round(dwell_ms / fec.INTERVAL_MS)) > 1e-9:
            raise ValueError("dwell must be a whole number of 10-ms intervals")
        subs = fec.INTERVAL_MS / self.turbulence.sample_interval
        if abs(subs - round(subs)) > 1e-9:
            raise ValueError("sample interval must divide the 10-ms FEC interval")
        if not 0 < self.lost_duration <= fec.INTERVAL_MS:
            raise ValueError("lost_duration must lie in (0, 10] ms")
        if isinstance(self.schedule, str) and self.schedule not in ("fixed", "walk"):
            raise ValueError(f"unknown turbulence schedule {self.schedule!r}")
        lo, hi = self.walk_bounds
        if not 0 <= lo <= hi:
            raise ValueError("walk bounds must satisfy 0 <= low <= high")

    def modem_for(self, channel: Channel) -> ModemModel:
        return ModemModel(
            channel.format,
            channel.symbol_rate,
            impl_penalty=self.penalties[channel.format.label],
            fec_limit=self.fec_limit,
        )

    def validate_scan(self, plan: ChannelPlan) -> None:
        validate_plan(plan)
        for cut, slot in self.scan_order:
            if slot % 2 != cut.parity:
                raise PlanError(f"scan step ({cut.value}, {slot}): slot parity does not match the CUT grid")
            if slot == plan.reference.slot:
                raise PlanError(f"scan step ({cut.value}, {slot}) targets the SP-QPSK reference slot")
            plan.channel(slot)

    def step_params(self, n_steps: int) -> list[TurbulenceParams]:
        """Turbulence parameters for each scan step."""
        if not isinstance(self.schedule, str):
            params = list(self.schedule)
            if len(params) < n_steps:
                raise ValueError(f"schedule has {len(params)} entries for {n_steps} steps")
            return params[:n_steps]
        if self.schedule == "fixed":
            return [self.turbulence] * n_steps
        lo, hi = self.walk_bounds
        out = [self.turbulence]
        s2 = self.turbulence.scintillation_index
        for step in range(1, n_steps):
            rng = np.random.default_rng(derive_seed(self.master_seed ^ _WALK_SALT, step))
            s2 = float(np.clip(s2 * math.exp(self.walk_sigma * rng.standard_normal()), lo, hi))
            out.append(replace(self.turbulence, scintillation_index=s2))
        return out


@dataclass
class CampaignRun:
    config: CampaignConfig
    records: list[IntervalRecord]
    step_params: list[TurbulenceParams]
    step_seeds: list[int]
    step_slots: list[tuple[str, int]]
    plans: list[ChannelPlan]
    profile: OsnrProfile
    dual_slots: tuple[int, int] | None = None

    @property
    def dual(self) -> bool:
        return self.dual_slots is not None

    def records_for(self, slot: int) -> list[IntervalRecord]:
        return [r for r in self.records if r.channel_slot == slot]

    def manifest(self) -> dict:
        cfg = self.config
        return {
            "mode": "dual" if self.dual else "scan",
            "master_seed": cfg.master_seed,
            "dwell_per_channel_s": cfg.dwell_per_channel,
            "readout_rate": cfg.readout_rate,
            "retune_gap_s": cfg.retune_gap,
            "lost_duration_ms": cfg.lost_duration,
            "block_duration_ms": cfg.block_duration,
            "fec_limit": cfg.fec_limit,
            "penalties_db": dict(cfg.penalties),
            "schedule": cfg.schedule if isinstance(cfg.schedule, str) else "explicit",
            "steps": [
                {"step": i, "cut": cut, "slot": slot, "seed": seed, "turbulence": asdict(params)}
                for i, ((cut, slot), seed, params) in enumerate(zip(self.step_slots, self.step_seeds, self.step_params))
            ],
            "dual_slots": list(self.dual_slots) if self.dual else None,
            "n_records": len(self.records),
        }


def _dwell_records(
    fading: np.ndarray,
    params: TurbulenceParams,
    channels: Sequence[Channel],
    profile: OsnrProfile,
    config: CampaignConfig,
    t0: float,
) -> list[IntervalRecord]:
    """Interval records for channels that all see the same fading realization."""
    dt = params.sample_interval
    n_sub = int(round(fec.INTERVAL_MS / dt))
    n_int = len(fading) // n_sub
    unlocked = unlocked_mask(fading, params.lock_loss_threshold, params.relock_time, dt)

    pattern = np.array(readout_pattern(config.readout_rate))
    seconds = np.arange(n_int // INTERVALS_PER_SECOND)
    rows = (seconds[:, None] * INTERVALS_PER_SECOND + pattern[None, :]).ravel()
    rows = rows[rows < n_int]

    intensity = fading[: n_int * n_sub].reshape(n_int, n_sub)[rows]
    lock = unlocked[: n_int * n_sub].reshape(n_int, n_sub)[rows]
    with np.errstate(divide="ignore"):
        fade_db = 10.0 * np.log10(intensity)
    times = [round(t0 + r / INTERVALS_PER_SECOND, 2) for r in rows]

    per_channel = []
    for ch in channels:
        model = config.modem_for(ch)
        osnr = np.where(lock, 0.0, profile[ch.slot] + fade_db)
        ber = np.where(lock, np.nan, ber_from_osnr(model, osnr))
        batch = accumulate_intervals(
            ber, dt, model, ch.gross_rate, config.lost_duration, config.block_duration
        )
        recs = [
            IntervalRecord(
                t_start=times[i],
                channel_slot=ch.slot,
                prefec_ber=batch.prefec_ber(i),
                uncorrected_blocks=int(batch.uncorrected_blocks[i]),
                postfec_errors=int(batch.postfec_errors[i]),
                locked=bool(batch.locked[i]),
                freq_ghz=ch.freq_ghz,
                format=ch.format.label,
            )
            for i in range(len(rows))
        ]
        per_channel.append(recs)
    # interleave by timestamp, then slot
    merged = [r for group in zip(*per_channel) for r in sorted(group, key=lambda r: r.channel_slot)]
    return merged


def run_campaign(
    plan: ChannelPlan,
    link: LinkConfig,
    config: CampaignConfig,
    offsets: Mapping[int, float] | None = None,
) -> CampaignRun:
    """Sequential CUT scan: one dwell per (CUT, slot) step, each with its own turbulence."""
    config.validate_scan(plan)
    profile = mean_osnr_profile(link, plan, offsets)
    n_steps = len(config.scan_order)
    params_list = config.step_params(n_steps)
    records, seeds, slots, plans = [], [], [], []
    t0 = 0.0
    current = plan
    for step, ((cut, slot), params) in enumerate(zip(config.scan_order, params_list)):
        current = tune_cut(current, cut, slot)
        seed = derive_seed(config.master_seed, step)
        fading = generate_fading(params, config.dwell_per_channel * 1000, seed)
        records.extend(_dwell_records(fading.samples, params, [current.channel(slot)], profile, config, t0))
        seeds.append(seed)
        slots.append((cut.value, slot))
        plans.append(current)
        t0 += config.dwell_per_channel + config.retune_gap
    return CampaignRun(config, records, params_list, seeds, slots, plans, profile)


def run_dual_cut(
    plan: ChannelPlan,
    link: LinkConfig,
    config: CampaignConfig,
    even_slot: int | None = None,
    odd_slot: int | None = None,
    even_format: ModulationFormat = ModulationFormat.DP16QAM,
    odd_format: ModulationFormat = ModulationFormat.DPQPSK,
    offsets: Mapping[int, float] | None = None,
) -> CampaignRun:
    """Both CUTs captured simultaneously under one shared fading realization.

    Defaults place them at 193.60 THz (even, DP-16QAM) and 193.55 THz (odd,
    DP-QPSK).
    """
    if even_slot is None:
        even_slot = plan.slot_of_freq(193.60)
    if odd_slot is None:
        odd_slot = plan.slot_of_freq(193.55)
    if abs(even_slot - odd_slot) != 1:
        raise PlanError(f"dual-CUT slots {even_slot} and {odd_slot} are not adjacent")
    scan = replace(config, scan_order=((Cut.EVEN, even_slot), (Cut.ODD, odd_slot)))
    scan.validate_scan(plan)
    current = tune_cut(tune_cut(plan, Cut.EVEN, even_slot), Cut.ODD, odd_slot)
    current = set_cut_format(set_cut_format(current, Cut.EVEN, even_format), Cut.ODD, odd_format)
    profile = mean_osnr_profile(link, current, offsets)

    (params,) = config.step_params(1)
    seed = derive_seed(config.master_seed, 0)
    fading = generate_fading(params, config.dwell_per_channel * 1000, seed)
    channels = [current.channel(even_slot), current.channel(odd_slot)]
    records = _dwell_records(fading.samples, params, channels, profile, config, 0.0)
    return CampaignRun(
        config,
        records,
        [params],
        [seed],
        [("dual", even_slot)],
        [current],
        profile,
        dual_slots=(even_slot, odd_slot),
    )
