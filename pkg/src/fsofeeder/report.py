"""Telemetry ingestion, interval statistics, and CSV/SVG report rendering.

Telemetry CSV (one row per 10-ms interval)::

    time_s,slot,freq_ghz,format,prefec_ber,uncorrected_blocks,postfec_errors,locked

``prefec_ber`` is a decimal float, ``nan`` for a lost interval, or ``<1e-8``
when no errors were counted. ``locked`` is ``0``/``1``.
"""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .fec import BELOW_FLOOR, IntervalClass, IntervalRecord, is_below_floor
from .linkbudget import OsnrProfile, write_profile_csv

TELEMETRY_HEADER = [
    "time_s",
    "slot",
    "freq_ghz",
    "format",
    "prefec_ber",
    "uncorrected_blocks",
    "postfec_errors",
    "locked",
]

HIST_LOG10_MIN = -8.0
HIST_LOG10_MAX = -1.0
HIST_BINS_PER_DECADE = 10
TIME_EVOLUTION_WINDOW_S = 10.0


class TelemetryError(ValueError):
    """Raised when a telemetry stream cannot be read at all (e.g. wrong header)."""


class Source(enum.Enum):
    SIMULATED = "Simulated"
    INGESTED = "Ingested"


@dataclass
class TelemetryLog:
    records: list[IntervalRecord]
    source: Source = Source.SIMULATED
    errors: list[tuple[int, str]] = field(default_factory=list)

    def slots(self) -> list[int]:
        return sorted({r.channel_slot for r in self.records})

    def for_slot(self, slot: int) -> list[IntervalRecord]:
        return [r for r in self.records if r.channel_slot == slot]


def format_ber(ber: float) -> str:
    if math.isnan(ber):
        return "nan"
    if is_below_floor(ber):
        return "<1e-8"
    return repr(float(ber))


def parse_ber(text: str) -> float:
    text = text.strip()
    if text == "nan":
        return math.nan
    if text == "<1e-8":
        return BELOW_FLOOR
    value = float(text)
    if math.isnan(value) or not 0 <= value <= 0.5:
        raise ValueError(f"pre-FEC BER {text!r} outside [0, 0.5]")
    return value


def write_telemetry(records: Iterable[IntervalRecord], stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TELEMETRY_HEADER)
    for r in records:
        writer.writerow(
            [
                repr(float(r.t_start)),
                r.channel_slot,
                r.freq_ghz,
                r.format,
                format_ber(r.prefec_ber),
                r.uncorrected_blocks,
                r.postfec_errors,
                1 if r.locked else 0,
            ]
        )


def telemetry_text(records: Iterable[IntervalRecord]) -> str:
    buf = io.StringIO()
    write_telemetry(records, buf)
    return buf.getvalue()


def _parse_row(row: list[str]) -> IntervalRecord:
    if len(row) != len(TELEMETRY_HEADER):
        raise ValueError(f"expected {len(TELEMETRY_HEADER)} fields, got {len(row)}")
    t, slot, freq, fmt, ber, blocks, post, locked = row
    blocks_i, post_i = int(blocks), int(post)
    if blocks_i < 0 or post_i < 0:
        raise ValueError("uncorrected_blocks and postfec_errors must be non-negative")
    if locked not in ("0", "1"):
        raise ValueError(f"locked must be 0 or 1, got {locked!r}")
    time_s = float(t)
    if not math.isfinite(time_s):
        raise ValueError("time_s must be finite")
    return IntervalRecord(
        t_start=time_s,
        channel_slot=int(slot),
        prefec_ber=parse_ber(ber),
        uncorrected_blocks=blocks_i,
        postfec_errors=post_i,
        locked=locked == "1",
        freq_ghz=int(freq),
        format=fmt,
    )


def ingest_log(stream: TextIO) -> TelemetryLog:
    """Parse a telemetry CSV; bad rows are collected in ``errors`` with line numbers."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise TelemetryError("empty telemetry file")
    if header != TELEMETRY_HEADER:
        raise TelemetryError(f"telemetry header mismatch: expected {','.join(TELEMETRY_HEADER)}")
    records, errors = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            records.append(_parse_row(row))
        except ValueError as exc:
            errors.append((lineno, str(exc)))
    return TelemetryLog(records, Source.INGESTED, errors)


def interval_percentages(log: TelemetryLog | Sequence[IntervalRecord], slot: int) -> dict[str, float]:
    records = log.for_slot(slot) if isinstance(log, TelemetryLog) else [r for r in log if r.channel_slot == slot]
    if not records:
        raise ValueError(f"no records for slot {slot}")
    counts = {c: 0 for c in IntervalClass}
    for r in records:
        counts[r.interval_class] += 1
    n = len(records)
    return {
        "valid_pct": 100.0 * counts[IntervalClass.VALID] / n,
        "uncorrected_pct": 100.0 * counts[IntervalClass.UNCORRECTED] / n,
        "lost_pct": 100.0 * counts[IntervalClass.LOST] / n,
        "n_records": n,
    }


@dataclass
class Histogram:
    """Valid-interval pre-FEC BERs in 0.1-decade bins over 1e-8..1e-1."""

    edges: np.ndarray
    counts: np.ndarray
    below_floor_count: int = 0

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.below_floor_count

    def density(self) -> np.ndarray:
        """Counts normalized to probability density per decade (below-floor mass included in the total)."""
        if self.total == 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts / (self.total * np.diff(self.edges))


def histogram_edges() -> np.ndarray:
    n = int(round((HIST_LOG10_MAX - HIST_LOG10_MIN) * HIST_BINS_PER_DECADE))
    return np.round(HIST_LOG10_MIN + np.arange(n + 1) / HIST_BINS_PER_DECADE, 10)


def _bin_index(ber: float, n_bins: int) -> int:
    pos = round((math.log10(ber) - HIST_LOG10_MIN) * HIST_BINS_PER_DECADE, 9)
    return min(int(math.floor(pos)), n_bins - 1)


def ber_histogram(log: TelemetryLog | Sequence[IntervalRecord], slot: int) -> Histogram:
    records = log.for_slot(slot) if isinstance(log, TelemetryLog) else [r for r in log if r.channel_slot == slot]
    edges = histogram_edges()
    counts = np.zeros(len(edges) - 1, dtype=np.int64)
    below = 0
    for r in records:
        if r.interval_class is not IntervalClass.VALID:
            continue
        ber = r.prefec_ber
        if is_below_floor(ber) or ber < 10**HIST_LOG10_MIN:
            below += 1
        else:
            counts[_bin_index(ber, len(counts))] += 1
    return Histogram(edges, counts, below)


def mean_osnr_estimate(sweeps: Sequence[Mapping[int, float]]) -> dict[int, float]:
    """Per-channel OSNR from several sweeps, averaged in linear units."""
    if not sweeps:
        raise ValueError("need at least one sweep")
    acc: dict[int, list[float]] = defaultdict(list)
    for sweep in sweeps:
        for slot, value in sweep.items():
            acc[slot].append(value)
    out = {}
    for slot, values in acc.items():
        if len(values) == 1:
            out[slot] = float(values[0])
            continue
        # sorted so the result does not depend on sweep order
        lin = np.sort(np.power(10.0, np.asarray(values) / 10.0))
        out[slot] = float(10.0 * np.log10(lin.mean()))
    return out


# ---------------------------------------------------------------- rendering


@dataclass
class ReportResult:
    files: list[Path]
    omitted_slots: list[int]

    @property
    def partial(self) -> bool:
        return bool(self.omitted_slots)


def _co_measured_groups(log: TelemetryLog) -> list[list[int]]:
    by_times: dict[tuple, list[int]] = defaultdict(list)
    for slot in log.slots():
        by_times[tuple(r.t_start for r in log.for_slot(slot))].append(slot)
    return [sorted(g) for g in by_times.values() if len(g) > 1]


def _svg_figure(figsize=(8, 4)):
    from matplotlib.figure import Figure

    return Figure(figsize=figsize)


def _save_svg(fig, path: Path) -> None:
    import matplotlib

    with matplotlib.rc_context({"svg.hashsalt": "fsofeeder", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def _write_percentages(log: TelemetryLog, slots: list[int], out: Path) -> list[Path]:
    rows = []
    for slot in slots:
        p = interval_percentages(log, slot)
        first = log.for_slot(slot)[0]
        rows.append((slot, first.freq_ghz, first.format, p))
    csv_path = out / "percentages.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "freq_ghz", "format", "n_records", "valid_pct", "uncorrected_pct", "lost_pct"])
        for slot, freq, fmt, p in rows:
            w.writerow([slot, freq, fmt, p["n_records"], repr(p["valid_pct"]), repr(p["uncorrected_pct"]), repr(p["lost_pct"])])

    fig = _svg_figure((max(6, 0.25 * len(rows) + 3), 4))
    ax = fig.add_subplot()
    x = np.arange(len(rows))
    valid = np.array([p["valid_pct"] for *_, p in rows])
    unc = np.array([p["uncorrected_pct"] for *_, p in rows])
    lost = np.array([p["lost_pct"] for *_, p in rows])
    ax.bar(x, valid, color="tab:green", label="error free")
    ax.bar(x, unc, bottom=valid, color="tab:orange", label="uncorrected blocks")
    ax.bar(x, lost, bottom=valid + unc, color="tab:red", label="lost")
    ax.set_xticks(x, [f"{freq / 1000:.2f}" for _, freq, _, _ in rows], rotation=90, fontsize=6)
    ax.set_xlabel("channel frequency [THz]")
    ax.set_ylabel("intervals [%]")
    ax.set_ylim(0, 100)
    ax.legend(loc="lower left", fontsize=7)
    fig.tight_layout()
    svg_path = out / "percentages.svg"
    _save_svg(fig, svg_path)
    return [csv_path, svg_path]


def _write_histograms(log: TelemetryLog, slots: list[int], out: Path) -> list[Path]:
    hists = {slot: ber_histogram(log, slot) for slot in slots}
    csv_path = out / "histograms.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "bin_lo_log10", "bin_hi_log10", "count"])
        for slot, h in hists.items():
            w.writerow([slot, "<1e-8", "", h.below_floor_count])
            for lo, hi, c in zip(h.edges[:-1], h.edges[1:], h.counts):
                w.writerow([slot, f"{lo:.1f}", f"{hi:.1f}", int(c)])

    fig = _svg_figure()
    ax = fig.add_subplot()
    centers = 0.5 * (hists[slots[0]].edges[:-1] + hists[slots[0]].edges[1:]) if slots else []
    for slot, h in hists.items():
        ax.step(centers, h.density(), where="mid", label=f"slot {slot}", linewidth=0.8)
    ax.set_xlabel("log10(pre-FEC BER)  (leftmost edge: <1e-8)")
    ax.set_ylabel("PDF [1/decade]")
    if len(hists) <= 8:
        ax.legend(fontsize=7)
    fig.tight_layout()
    svg_path = out / "histograms.svg"
    _save_svg(fig, svg_path)
    return [csv_path, svg_path]


def _write_profile(profile: OsnrProfile, out: Path) -> list[Path]:
    csv_path = out / "osnr_profile.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        write_profile_csv(profile, fh)
    fig = _svg_figure()
    ax = fig.add_subplot()
    slots = profile.slots
    ax.plot([profile.freq_ghz[s] / 1000 for s in slots], [profile[s] for s in slots], "o-", markersize=3)
    ax.set_xlabel("channel frequency [THz]")
    ax.set_ylabel("mean OSNR [dB / 0.1 nm]")
    fig.tight_layout()
    svg_path = out / "osnr_profile.svg"
    _save_svg(fig, svg_path)
    return [csv_path, svg_path]


def _write_time_evolution(log: TelemetryLog, slots: list[int], out: Path) -> list[Path]:
    csv_path = out / "time_evolution.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "slot", "format", "class", "prefec_ber"])
        for r in sorted(log.records, key=lambda r: (r.t_start, r.channel_slot)):
            if r.channel_slot in slots:
                w.writerow([repr(float(r.t_start)), r.channel_slot, r.format, r.interval_class.value, format_ber(r.prefec_ber)])

    groups = _co_measured_groups(log)
    shown = groups[0] if groups else slots[:2]
    fig = _svg_figure()
    ax = fig.add_subplot()
    for slot in shown:
        recs = log.for_slot(slot)
        t0 = recs[0].t_start
        recs = [r for r in recs if r.t_start - t0 < TIME_EVOLUTION_WINDOW_S]
        t = np.array([r.t_start - t0 for r in recs])
        y = np.array(
            [
                HIST_LOG10_MIN if r.below_floor else (math.log10(r.prefec_ber) if r.interval_class is IntervalClass.VALID else 0.0)
                for r in recs
            ]
        )
        ax.plot(t, y, ".", markersize=3, label=f"{recs[0].format} (slot {slot})")
    ax.set_yticks([-8, -6, -4, -2, 0], ["<1e-8", "1e-6", "1e-4", "1e-2", "FEC>0"])
    ax.set_xlabel("time [s]")
    ax.set_ylabel("pre-FEC BER")
    ax.legend(fontsize=7)
    fig.tight_layout()
    svg_path = out / "time_evolution.svg"
    _save_svg(fig, svg_path)
    return [csv_path, svg_path]


def render_report(
    out_dir: str | os.PathLike,
    log: TelemetryLog,
    profile: OsnrProfile | None = None,
    expected_slots: Iterable[int] | None = None,
) -> ReportResult:
    """Write percentage, histogram, OSNR-profile and time-evolution reports.

    Expected slots without records are left out and listed in
    ``report_notes.txt``; the result then reports itself as partial.
    """
    if not log.records:
        raise ValueError("cannot render a report from an empty telemetry log")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create report directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise OSError(f"report directory {out} is not writable")

    slots = log.slots()
    omitted = sorted(set(expected_slots or ()) - set(slots))
    files = []
    files += _write_percentages(log, slots, out)
    files += _write_histograms(log, slots, out)
    if profile is not None:
        files += _write_profile(profile, out)
    files += _write_time_evolution(log, slots, out)
    if omitted:
        notes = out / "report_notes.txt"
        notes.write_text(
            "".join(f"slot {s}: no telemetry records, channel omitted\n" for s in omitted), encoding="utf-8"
        )
        files.append(notes)
    return ReportResult(files, omitted)
