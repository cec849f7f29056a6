"""Command-line entry point.

Exit codes: 0 ok, 1 report written but partial, 2 configuration or input
error, 3 I/O error, 4 calibration did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .calibration import FIELD_TRIAL_QAM16, FIELD_TRIAL_QPSK, CalibrationError, CalibrationTargets, calibrate
from .campaign import run_campaign, run_dual_cut
from .config import ConfigError, RunConfig, load_config
from .linkbudget import read_profile_csv
from .modem import ModemModel, ber_curve
from .plan import ModulationFormat, plan_to_csv_text
from .report import TelemetryError, TelemetryLog, ingest_log, render_report, telemetry_text

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CALIBRATION = 4

log = logging.getLogger("fsofeeder")


def _err(msg: str) -> None:
    print(f"fsofeeder: {msg}", file=sys.stderr)


def _load(path, seed) -> RunConfig:
    cfg = load_config(path)
    if seed is not None:
        cfg.set("campaign", "seed", seed)
    cfg.validate()
    return cfg


def cmd_simulate(args) -> int:
    try:
        cfg = _load(args.config, args.seed)
        offsets = cfg.offsets()
    except (ConfigError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    plan = cfg.build_plan()
    link = cfg.build_link()
    campaign = cfg.build_campaign(plan)
    if cfg["campaign"]["mode"] == "dual":
        even_fmt, odd_fmt = cfg.dual_formats()
        c = cfg["campaign"]
        run = run_dual_cut(plan, link, campaign, c["dual_even_slot"], c["dual_odd_slot"], even_fmt, odd_fmt, offsets)
    else:
        run = run_campaign(plan, link, campaign, offsets)

    out = cfg.output_dir(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "telemetry.csv").write_text(telemetry_text(run.records), encoding="utf-8", newline="\n")
        (out / "plan.csv").write_text(plan_to_csv_text(run.plans[0]), encoding="utf-8", newline="\n")
        manifest = {"version": __version__, "config": cfg.to_text(), **run.manifest()}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        expected = [slot for _, slot in run.step_slots] if not run.dual else list(run.dual_slots)
        result = render_report(out / "report", TelemetryLog(run.records), run.profile, expected)
    except OSError as exc:
        _err(f"cannot write outputs under {out}: {exc}")
        return EXIT_IO
    print(f"wrote {len(run.records)} interval records and {len(result.files)} report files to {out}")
    return EXIT_PARTIAL if result.partial else EXIT_OK


def cmd_analyze(args) -> int:
    try:
        with open(args.telemetry, encoding="utf-8", newline="") as fh:
            tlog = ingest_log(fh)
    except TelemetryError as exc:
        _err(f"{args.telemetry}: {exc}")
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"cannot read {args.telemetry}: {exc.strerror}")
        return EXIT_IO
    for lineno, msg in tlog.errors:
        _err(f"{args.telemetry}:{lineno}: {msg}")
    if not tlog.records:
        _err(f"{args.telemetry}: no usable telemetry records")
        return EXIT_CONFIG

    profile = None
    if args.osnr:
        try:
            with open(args.osnr, encoding="utf-8", newline="") as fh:
                profile = read_profile_csv(fh)
        except (OSError, ValueError) as exc:
            _err(f"cannot load OSNR profile {args.osnr}: {exc}")
            return EXIT_CONFIG
    expected = [int(s) for s in args.expect_slots.split(",") if s.strip()] if args.expect_slots else None
    out = Path(args.out) if args.out else RunConfig().output_dir() / "report"
    try:
        result = render_report(out, tlog, profile, expected)
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO
    for slot in result.omitted_slots:
        _err(f"slot {slot}: no records, channel omitted from report")
    print(f"analyzed {len(tlog.records)} records over {len(tlog.slots())} channels; report in {out}")
    if tlog.errors:
        return EXIT_CONFIG
    return EXIT_PARTIAL if result.partial else EXIT_OK


def parse_targets(text: str | None) -> CalibrationTargets:
    """``V,U,L`` for DP-16QAM, optionally ``;V,U,L`` for DP-QPSK (``;`` alone drops QPSK)."""
    if not text:
        return CalibrationTargets(FIELD_TRIAL_QAM16, FIELD_TRIAL_QPSK)
    parts = text.split(";")
    if len(parts) > 2:
        raise ValueError("targets take at most two groups: 16QAM;QPSK")

    def triple(s):
        vals = tuple(float(v) for v in s.split(","))
        if len(vals) != 3:
            raise ValueError(f"target group {s!r} needs three percentages")
        return vals

    qam16 = triple(parts[0])
    qpsk = triple(parts[1]) if len(parts) == 2 and parts[1].strip() else None
    return CalibrationTargets(qam16, qpsk)


def _fmt_triple(t) -> str:
    return "/".join(f"{v:.2f}" for v in t)


def cmd_calibrate(args) -> int:
    try:
        cfg = _load(args.config, args.seed)
        targets = parse_targets(args.targets)
        offsets = cfg.offsets()
    except (ConfigError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    plan = cfg.build_plan()
    c = cfg["campaign"]
    try:
        result = calibrate(plan, cfg.build_link(), cfg.build_campaign(plan), targets, offsets=offsets,
                           even_slot=c["dual_even_slot"], odd_slot=c["dual_odd_slot"])
        ok = True
    except CalibrationError as exc:
        _err(str(exc))
        result = exc.result
        ok = False
    if result is None:
        return EXIT_CALIBRATION

    print(f"scintillation_index    = {result.scintillation_index:.6f}")
    print(f"lock_loss_threshold_db = {result.lock_loss_threshold:.4f}")
    print(f"lost_duration_ms       = {result.lost_duration:.1f}")
    print(f"DP-16QAM valid/uncorrected/lost: achieved {_fmt_triple(result.achieved_qam16)}  target {_fmt_triple(targets.qam16)}")
    if targets.qpsk is not None:
        print(f"DP-QPSK  valid/uncorrected/lost: achieved {_fmt_triple(result.achieved_qpsk)}  target {_fmt_triple(targets.qpsk)}")
    if not ok:
        print("best-found values above do not meet the tolerance")
        return EXIT_CALIBRATION

    cfg.set("turbulence", "scintillation_index", result.scintillation_index)
    cfg.set("turbulence", "lock_loss_threshold_db", result.lock_loss_threshold)
    cfg.set("fec", "lost_duration_ms", result.lost_duration)
    cfg.set("turbulence", "schedule", "fixed")
    cfg.set("campaign", "mode", "dual")
    out = Path(args.out) if args.out else cfg.output_dir() / "calibrated.ini"
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(cfg.to_text(), encoding="utf-8")
    except OSError as exc:
        _err(f"cannot write {out}: {exc}")
        return EXIT_IO
    print(f"fitted parameters written to {out}")
    return EXIT_OK


def cmd_modem_curve(args) -> int:
    try:
        fmt = ModulationFormat.parse(args.format)
        cfg = _load(args.config, None)
        lo, _, hi = args.range.partition(":")
        lo, hi = float(lo), float(hi)
    except (ConfigError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    m = cfg["modem"]
    model = ModemModel.for_format(fmt, impl_penalty=m[f"penalty_{fmt.label.lower()}_db"], fec_limit=m["fec_limit"])
    if fmt is ModulationFormat.DP8QAM:
        _err("warning: DP-8QAM curve is uncalibrated (rectangular-constellation approximation)")
    try:
        osnr, ber = ber_curve(model, lo, hi, args.step)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    lines = ["osnr_db,ber"] + [f"{o!r},{b!r}" for o, b in zip(osnr.tolist(), ber.tolist())]
    text = "\n".join(lines) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            _err(f"cannot write {args.out}: {exc}")
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsofeeder", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a CUT scan or dual-CUT campaign and write telemetry + reports")
    p.add_argument("--config", help="INI run configuration (defaults used when omitted)")
    p.add_argument("--seed", type=int, help="master seed (overrides [campaign] seed)")
    p.add_argument("--out", help="output directory (else $FSOFEEDER_OUT, else [output] dir)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="build reports from an existing telemetry CSV")
    p.add_argument("telemetry")
    p.add_argument("--out", help="report directory")
    p.add_argument("--osnr", help="OSNR profile CSV (slot,freq_ghz,osnr_db) to include")
    p.add_argument("--expect-slots", help="comma-separated slots that should be present")
    p.add_argument("--seed", type=int, help="accepted for interface symmetry; analysis is deterministic")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("calibrate", help="fit turbulence/lock parameters to dual-CUT interval shares")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--targets", help="16QAM 'V,U,L' percentages, optionally ';V,U,L' for QPSK")
    p.add_argument("--out", help="path of the fitted config file")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("modem-curve", help="dump BER vs OSNR as CSV")
    p.add_argument("format", help="DP16QAM, DP8QAM, DPQPSK or SPQPSK")
    p.add_argument("--range", default="12:25", help="OSNR range lo:hi in dB")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--config")
    p.add_argument("--seed", type=int, help="accepted for interface symmetry; curves are deterministic")
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(func=cmd_modem_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
