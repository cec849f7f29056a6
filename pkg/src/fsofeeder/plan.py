"""DWDM channel plan of the 54-channel field trial.

Frequencies are held as integer GHz so that grid arithmetic is exact; the
``center_freq`` properties convert to THz on demand.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field, replace
from typing import Iterable, TextIO

GRID_SPACING_GHZ = 50
N_CHANNELS = 54
DEFAULT_BASE_GHZ = 192_100

CUT_SYMBOL_RATE_GBD = 34.475
LOADING_SYMBOL_RATE_GBD = 32.0
SP_QPSK_SYMBOL_RATE_GBD = 32.0

LOADING_GROSS_GBPS = 245.3
LOADING_FEC_OH = 0.15
LOADING_TX_OSNR_DB = 11.5
CUT_FEC_OH = 0.25
CUT_TX_OSNR_DB = 30.0
SP_QPSK_GROSS_GBPS = 100.0

# (gross, net) in Gbit/s of a transponder CUT per format
CUT_RATES_GBPS = {
    "DP16QAM": (275.8, 200.0),
    "DP8QAM": (206.85, 150.0),
    "DPQPSK": (137.9, 100.0),
}

PLAN_CSV_HEADER = [
    "slot",
    "freq_ghz",
    "role",
    "format",
    "symbol_rate_gbd",
    "gross_gbps",
    "net_gbps",
    "fec_oh",
    "tx_osnr_db",
]


class PlanError(ValueError):
    """Raised for channel plans or tuning requests that break plan invariants."""


class ModulationFormat(enum.Enum):
    DP16QAM = ("DP16QAM", 8, 2)
    DP8QAM = ("DP8QAM", 6, 2)
    DPQPSK = ("DPQPSK", 4, 2)
    SPQPSK = ("SPQPSK", 2, 1)

    def __init__(self, label: str, bits_per_symbol: int, polarizations: int):
        self.label = label
        self.bits_per_symbol = bits_per_symbol
        self.polarizations = polarizations

    @classmethod
    def parse(cls, text: str) -> "ModulationFormat":
        key = text.strip().upper().replace("-", "").replace("_", "")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown modulation format {text!r}") from None

    def __str__(self) -> str:
        return self.label


class Role(enum.Enum):
    LOADING = "Loading"
    CUT_EVEN = "CutEven"
    CUT_ODD = "CutOdd"
    SP_QPSK_REF = "SpQpskRef"

    @classmethod
    def parse(cls, text: str) -> "Role":
        for role in cls:
            if role.value.lower() == text.strip().lower():
                return role
        raise ValueError(f"unknown channel role {text!r}")


class Cut(enum.Enum):
    EVEN = "even"
    ODD = "odd"

    @property
    def role(self) -> Role:
        return Role.CUT_EVEN if self is Cut.EVEN else Role.CUT_ODD

    @property
    def parity(self) -> int:
        return 0 if self is Cut.EVEN else 1

    @classmethod
    def parse(cls, text: str) -> "Cut":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"CUT must be 'even' or 'odd', got {text!r}") from None


@dataclass(frozen=True)
class Channel:
    slot: int
    freq_ghz: int
    role: Role
    format: ModulationFormat
    symbol_rate: float
    gross_rate: float
    net_rate: float | None
    fec_overhead: float
    tx_osnr: float

    def __post_init__(self):
        if self.gross_rate <= 0:
            raise PlanError(f"slot {self.slot}: gross rate must be positive")
        if self.net_rate is not None and self.net_rate > self.gross_rate:
            raise PlanError(f"slot {self.slot}: net rate exceeds gross rate")
        if self.role is Role.SP_QPSK_REF and (
            self.format is not ModulationFormat.SPQPSK or self.gross_rate != SP_QPSK_GROSS_GBPS
        ):
            raise PlanError("the SP-QPSK reference must be SPQPSK at 100 Gbit/s")

    @property
    def center_freq(self) -> float:
        """Center frequency in THz."""
        return self.freq_ghz / 1000.0

    @property
    def is_cut(self) -> bool:
        return self.role in (Role.CUT_EVEN, Role.CUT_ODD)


@dataclass(frozen=True)
class ChannelPlan:
    channels: tuple[Channel, ...]
    base_freq_ghz: int = DEFAULT_BASE_GHZ
    _by_slot: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(sorted(self.channels, key=lambda c: c.slot)))
        by_slot = {}
        for ch in self.channels:
            if ch.slot in by_slot:
                raise PlanError(f"duplicate slot {ch.slot}")
            if ch.freq_ghz != self.base_freq_ghz + ch.slot * GRID_SPACING_GHZ:
                raise PlanError(f"slot {ch.slot} is off the 50-GHz grid")
            by_slot[ch.slot] = ch
        object.__setattr__(self, "_by_slot", by_slot)

    @property
    def base_freq(self) -> float:
        """Grid origin in THz."""
        return self.base_freq_ghz / 1000.0

    def __len__(self) -> int:
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    def channel(self, slot: int) -> Channel:
        try:
            return self._by_slot[slot]
        except KeyError:
            raise PlanError(f"no channel in slot {slot}") from None

    def slot_of_freq(self, freq_thz: float) -> int:
        offset = round(freq_thz * 1000) - self.base_freq_ghz
        if offset % GRID_SPACING_GHZ:
            raise PlanError(f"{freq_thz} THz is not on the 50-GHz grid")
        slot = offset // GRID_SPACING_GHZ
        self.channel(slot)
        return slot

    def with_role(self, role: Role) -> list[Channel]:
        return [c for c in self.channels if c.role is role]

    def cut(self, which: Cut) -> Channel:
        (ch,) = self.with_role(which.role)
        return ch

    @property
    def reference(self) -> Channel:
        (ch,) = self.with_role(Role.SP_QPSK_REF)
        return ch


def slot_freq_ghz(slot: int, base_freq_ghz: int = DEFAULT_BASE_GHZ) -> int:
    return base_freq_ghz + slot * GRID_SPACING_GHZ


def loading_channel(slot: int, base_freq_ghz: int = DEFAULT_BASE_GHZ, tx_osnr: float = LOADING_TX_OSNR_DB) -> Channel:
    return Channel(
        slot=slot,
        freq_ghz=slot_freq_ghz(slot, base_freq_ghz),
        role=Role.LOADING,
        format=ModulationFormat.DP16QAM,
        symbol_rate=LOADING_SYMBOL_RATE_GBD,
        gross_rate=LOADING_GROSS_GBPS,
        net_rate=None,
        fec_overhead=LOADING_FEC_OH,
        tx_osnr=tx_osnr,
    )


def cut_channel(
    slot: int,
    which: Cut,
    fmt: ModulationFormat = ModulationFormat.DP16QAM,
    base_freq_ghz: int = DEFAULT_BASE_GHZ,
) -> Channel:
    if fmt.label not in CUT_RATES_GBPS:
        raise PlanError(f"transponder CUTs do not support {fmt}")
    gross, net = CUT_RATES_GBPS[fmt.label]
    return Channel(
        slot=slot,
        freq_ghz=slot_freq_ghz(slot, base_freq_ghz),
        role=which.role,
        format=fmt,
        symbol_rate=CUT_SYMBOL_RATE_GBD,
        gross_rate=gross,
        net_rate=net,
        fec_overhead=CUT_FEC_OH,
        tx_osnr=CUT_TX_OSNR_DB,
    )


def build_default_plan(
    base_freq_ghz: int = DEFAULT_BASE_GHZ,
    ref_slot: int = 26,
    cut_even_slot: int = 30,
    cut_odd_slot: int = 29,
    loading_tx_osnr: float = LOADING_TX_OSNR_DB,
) -> ChannelPlan:
    """Return the 54-channel trial plan.

    With the default 192.10 THz origin the SP-QPSK reference sits at
    193.40 THz (slot 26) and the two CUTs start at 193.60 THz (even) and
    193.55 THz (odd), the positions of the dual-format experiment.
    """
    if cut_even_slot % 2 or not cut_odd_slot % 2:
        raise PlanError("CUT slots must match their even/odd grid")
    if ref_slot in (cut_even_slot, cut_odd_slot):
        raise PlanError("a CUT cannot share the reference slot")
    channels = []
    for slot in range(N_CHANNELS):
        if slot == ref_slot:
            channels.append(
                Channel(
                    slot=slot,
                    freq_ghz=slot_freq_ghz(slot, base_freq_ghz),
                    role=Role.SP_QPSK_REF,
                    format=ModulationFormat.SPQPSK,
                    symbol_rate=SP_QPSK_SYMBOL_RATE_GBD,
                    gross_rate=SP_QPSK_GROSS_GBPS,
                    net_rate=None,
                    fec_overhead=0.0,
                    tx_osnr=CUT_TX_OSNR_DB,
                )
            )
        elif slot == cut_even_slot:
            channels.append(cut_channel(slot, Cut.EVEN, base_freq_ghz=base_freq_ghz))
        elif slot == cut_odd_slot:
            channels.append(cut_channel(slot, Cut.ODD, base_freq_ghz=base_freq_ghz))
        else:
            channels.append(loading_channel(slot, base_freq_ghz, loading_tx_osnr))
    plan = ChannelPlan(tuple(channels), base_freq_ghz)
    validate_plan(plan)
    return plan


def validate_plan(plan: ChannelPlan) -> None:
    """Check the full-trial invariants (54 contiguous slots, one of each special role)."""
    slots = [c.slot for c in plan.channels]
    if slots != list(range(N_CHANNELS)):
        raise PlanError(f"expected contiguous slots 0..{N_CHANNELS - 1}, got {len(slots)} channels")
    for role in (Role.SP_QPSK_REF, Role.CUT_EVEN, Role.CUT_ODD):
        n = len(plan.with_role(role))
        if n != 1:
            raise PlanError(f"expected exactly one {role.value} channel, found {n}")
    for which in Cut:
        if plan.cut(which).slot % 2 != which.parity:
            raise PlanError(f"{which.role.value} is not on the {which.value} grid")


def tune_cut(plan: ChannelPlan, which: Cut | str, target_slot: int) -> ChannelPlan:
    """Move a CUT to ``target_slot``; the displaced loading channel takes the CUT's old slot."""
    which = Cut.parse(which) if isinstance(which, str) else which
    validate_plan(plan)
    if target_slot % 2 != which.parity:
        raise PlanError(f"slot {target_slot} is not on the {which.value} grid of the {which.role.value} channel")
    if target_slot == plan.reference.slot:
        raise PlanError(f"slot {target_slot} holds the SP-QPSK reference and cannot host a CUT")
    cut = plan.cut(which)
    if target_slot == cut.slot:
        return plan
    displaced = plan.channel(target_slot)
    moved_cut = replace(cut, slot=target_slot, freq_ghz=displaced.freq_ghz)
    moved_loading = replace(displaced, slot=cut.slot, freq_ghz=cut.freq_ghz)
    others = [c for c in plan.channels if c.slot not in (cut.slot, target_slot)]
    return ChannelPlan(tuple(others + [moved_cut, moved_loading]), plan.base_freq_ghz)


def set_cut_format(plan: ChannelPlan, which: Cut | str, fmt: ModulationFormat) -> ChannelPlan:
    """Switch a CUT's modulation format (rates follow the transponder table)."""
    which = Cut.parse(which) if isinstance(which, str) else which
    cut = plan.cut(which)
    if cut.format is fmt:
        return plan
    new = replace(cut_channel(cut.slot, which, fmt, plan.base_freq_ghz), tx_osnr=cut.tx_osnr)
    others = [c for c in plan.channels if c.slot != cut.slot]
    return ChannelPlan(tuple(others + [new]), plan.base_freq_ghz)


def aggregate_rates(plan: ChannelPlan | Iterable[Channel]) -> dict[str, float]:
    channels = plan.channels if isinstance(plan, ChannelPlan) else tuple(plan)
    # sum in 100 Mbit/s units so the 13,161.9 Gbit/s total is exact
    gross = sum(round(c.gross_rate * 10) for c in channels) / 10
    net = sum(round(c.net_rate * 10) for c in channels if c.net_rate is not None) / 10
    return {"gross_total": gross, "net_total_known": net}


def write_plan_csv(plan: ChannelPlan, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(PLAN_CSV_HEADER)
    for c in plan.channels:
        writer.writerow(
            [
                c.slot,
                c.freq_ghz,
                c.role.value,
                c.format.label,
                repr(c.symbol_rate),
                repr(c.gross_rate),
                "" if c.net_rate is None else repr(c.net_rate),
                repr(c.fec_overhead),
                repr(c.tx_osnr),
            ]
        )


def read_plan_csv(stream: TextIO, base_freq_ghz: int | None = None) -> ChannelPlan:
    reader = csv.reader(stream)
    header = next(reader, None)
    if header != PLAN_CSV_HEADER:
        raise PlanError(f"plan CSV header mismatch: {header}")
    channels = []
    for row in reader:
        if not row:
            continue
        slot, freq, role, fmt, sym, gross, net, oh, osnr = row
        channels.append(
            Channel(
                slot=int(slot),
                freq_ghz=int(freq),
                role=Role.parse(role),
                format=ModulationFormat.parse(fmt),
                symbol_rate=float(sym),
                gross_rate=float(gross),
                net_rate=float(net) if net else None,
                fec_overhead=float(oh),
                tx_osnr=float(osnr),
            )
        )
    if base_freq_ghz is None:
        if not channels:
            raise PlanError("empty plan CSV")
        first = min(channels, key=lambda c: c.slot)
        base_freq_ghz = first.freq_ghz - first.slot * GRID_SPACING_GHZ
    return ChannelPlan(tuple(channels), base_freq_ghz)


def plan_to_csv_text(plan: ChannelPlan) -> str:
    buf = io.StringIO()
    write_plan_csv(plan, buf)
    return buf.getvalue()
