"""Run configuration: a flat, sectioned INI file with strict keys.

Every key has a default; unknown sections or keys are rejected so that a typo
can never silently fall back to a default.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, field
from pathlib import Path

from .campaign import CampaignConfig, full_scan_order
from .fec import DEFAULT_BLOCK_MS, DEFAULT_LOST_DURATION_MS
from .linkbudget import LinkConfig, read_offsets_csv
from .modem import DEFAULT_FEC_LIMIT, DEFAULT_PENALTIES
from .plan import ChannelPlan, Cut, ModulationFormat, build_default_plan
from .seeding import DEFAULT_SEED
from .turbulence import TurbulenceParams

OUT_DIR_ENV = "FSOFEEDER_OUT"


class ConfigError(ValueError):
    """Invalid configuration file or value."""


# section -> key -> (type, default)
SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "plan": {
        "base_freq_ghz": (int, 192_100),
        "reference_slot": (int, 26),
        "cut_even_slot": (int, 30),
        "cut_odd_slot": (int, 29),
        "loading_tx_osnr_db": (float, 11.5),
    },
    "link": {
        "tx_power_dbm": (float, 32.0),
        "center_osnr_db": (float, 20.89),
        "tilt_db_per_thz": (float, -1.0),
        "link_length_km": (float, 10.45),
        "offsets_file": (str, ""),
    },
    "modem": {
        "fec_limit": (float, DEFAULT_FEC_LIMIT),
        **{f"penalty_{f.label.lower()}_db": (float, p) for f, p in DEFAULT_PENALTIES.items()},
    },
    "turbulence": {
        "scintillation_index": (float, 0.1),
        "coherence_time_ms": (float, 2.0),
        "sample_interval_ms": (float, 0.1),
        "lock_loss_threshold_db": (float, 12.0),
        "relock_time_ms": (float, 2.0),
        "schedule": (str, "fixed"),
        "walk_sigma": (float, 0.3),
        "walk_min": (float, 0.01),
        "walk_max": (float, 1.0),
    },
    "fec": {
        "lost_duration_ms": (float, DEFAULT_LOST_DURATION_MS),
        "block_duration_ms": (float, DEFAULT_BLOCK_MS),
    },
    "campaign": {
        "mode": (str, "scan"),
        "dwell_s": (float, 120.0),
        "readout_rate": (int, 16),
        "retune_gap_s": (float, 300.0),
        "scan": (str, "full"),
        "dual_even_slot": (int, 30),
        "dual_odd_slot": (int, 29),
        "dual_even_format": (str, "DP16QAM"),
        "dual_odd_format": (str, "DPQPSK"),
        "seed": (int, DEFAULT_SEED),
    },
    "output": {
        "dir": (str, "out"),
    },
}


def _convert(kind: type, raw: str, where: str):
    raw = raw.strip()
    try:
        if kind is int:
            return int(raw, 0)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from None


def parse_scan(text: str) -> tuple[tuple[Cut, int], ...] | None:
    """``full`` or a whitespace/comma separated list of ``even:SLOT`` / ``odd:SLOT``."""
    text = text.strip()
    if text == "full":
        return None
    steps = []
    for token in text.replace(",", " ").split():
        cut, _, slot = token.partition(":")
        try:
            steps.append((Cut.parse(cut), int(slot)))
        except ValueError:
            raise ConfigError(f"[campaign] scan: bad step {token!r} (expected even:N or odd:N)") from None
    if not steps:
        raise ConfigError("[campaign] scan: empty scan order")
    return tuple(steps)


@dataclass
class RunConfig:
    values: dict[str, dict[str, object]] = field(
        default_factory=lambda: {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    )
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, section: str) -> dict[str, object]:
        return self.values[section]

    def set(self, section: str, key: str, value) -> None:
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown config key [{section}] {key}")
        self.values[section][key] = value

    # ------------------------------------------------------------ builders

    def build_plan(self) -> ChannelPlan:
        p = self["plan"]
        return build_default_plan(
            base_freq_ghz=p["base_freq_ghz"],
            ref_slot=p["reference_slot"],
            cut_even_slot=p["cut_even_slot"],
            cut_odd_slot=p["cut_odd_slot"],
            loading_tx_osnr=p["loading_tx_osnr_db"],
        )

    def build_link(self) -> LinkConfig:
        k = self["link"]
        return LinkConfig(
            tx_power_total=k["tx_power_dbm"],
            center_osnr=k["center_osnr_db"],
            tilt_slope=k["tilt_db_per_thz"],
            link_length=k["link_length_km"],
        )

    def offsets(self) -> dict[int, float] | None:
        path = self["link"]["offsets_file"]
        if not path:
            return None
        path = Path(path)
        if not path.is_absolute():
            path = self.base_dir / path
        with open(path, encoding="utf-8") as fh:
            return read_offsets_csv(fh)

    def build_turbulence(self) -> TurbulenceParams:
        t = self["turbulence"]
        return TurbulenceParams(
            scintillation_index=t["scintillation_index"],
            coherence_time=t["coherence_time_ms"],
            sample_interval=t["sample_interval_ms"],
            lock_loss_threshold=t["lock_loss_threshold_db"],
            relock_time=t["relock_time_ms"],
        )

    def build_campaign(self, plan: ChannelPlan | None = None) -> CampaignConfig:
        c, t, m, f = self["campaign"], self["turbulence"], self["modem"], self["fec"]
        plan = plan or self.build_plan()
        scan = parse_scan(c["scan"]) or full_scan_order(plan)
        return CampaignConfig(
            dwell_per_channel=c["dwell_s"],
            readout_rate=c["readout_rate"],
            retune_gap=c["retune_gap_s"],
            scan_order=scan,
            turbulence=self.build_turbulence(),
            schedule=t["schedule"],
            walk_sigma=t["walk_sigma"],
            walk_bounds=(t["walk_min"], t["walk_max"]),
            lost_duration=f["lost_duration_ms"],
            block_duration=f["block_duration_ms"],
            fec_limit=m["fec_limit"],
            penalties={fmt.label: m[f"penalty_{fmt.label.lower()}_db"] for fmt in ModulationFormat},
            master_seed=c["seed"],
        )

    def dual_formats(self) -> tuple[ModulationFormat, ModulationFormat]:
        c = self["campaign"]
        return ModulationFormat.parse(c["dual_even_format"]), ModulationFormat.parse(c["dual_odd_format"])

    def output_dir(self, override: str | None = None) -> Path:
        if override:
            return Path(override)
        env = os.environ.get(OUT_DIR_ENV)
        if env:
            return Path(env)
        out = Path(self["output"]["dir"])
        return out if out.is_absolute() else self.base_dir / out

    def validate(self) -> None:
        """Build every object once so value errors surface as ``ConfigError``."""
        mode = self["campaign"]["mode"]
        if mode not in ("scan", "dual"):
            raise ConfigError(f"[campaign] mode must be 'scan' or 'dual', got {mode!r}")
        try:
            plan = self.build_plan()
            self.build_link()
            cfg = self.build_campaign(plan)
            if mode == "scan":
                cfg.validate_scan(plan)
            self.dual_formats()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # ------------------------------------------------------------ text I/O

    def to_text(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        for section, keys in SCHEMA.items():
            parser[section] = {}
            for key, (kind, _) in keys.items():
                value = self.values[section][key]
                parser[section][key] = repr(value) if kind is float else str(value)
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def parse_config_text(text: str, base_dir: Path | None = None, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg = RunConfig(base_dir=base_dir or Path.cwd())
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser[section].items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key '{key}' in [{section}]")
            kind, _ = SCHEMA[section][key]
            cfg.values[section][key] = _convert(kind, raw, f"{source} [{section}] {key}")
    return cfg


def load_config(path: str | os.PathLike | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, path.parent, str(path))
