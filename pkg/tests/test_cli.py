import csv
import io
import json

import pytest

from fsofeeder.cli import main, parse_targets
from fsofeeder.config import ConfigError, RunConfig, load_config, parse_config_text, parse_scan
from fsofeeder.plan import Cut

from oracles import fixture_rows

SHORT_DUAL = """
[turbulence]
scintillation_index = 0.05
lock_loss_threshold_db = 3.2

[fec]
lost_duration_ms = 2.2

[campaign]
mode = dual
dwell_s = 5
"""

SHORT_SCAN = """
[turbulence]
schedule = walk

[campaign]
mode = scan
dwell_s = 2
retune_gap_s = 10
scan = even:30 odd:41 even:52
"""


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_defaults_and_round_trip():
    cfg = RunConfig()
    assert cfg["link"]["center_osnr_db"] == 20.89
    assert cfg["campaign"]["seed"] == 20190901
    again = parse_config_text(cfg.to_text())
    assert again.values == cfg.values


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="scintilation_index"):
        parse_config_text("[turbulence]\nscintilation_index = 0.1\n")
    with pytest.raises(ConfigError, match="weather"):
        parse_config_text("[weather]\nwind = 3\n")
    with pytest.raises(ConfigError, match="float"):
        parse_config_text("[link]\ncenter_osnr_db = high\n")


def test_parse_scan():
    assert parse_scan("full") is None
    assert parse_scan("even:30, odd:41") == ((Cut.EVEN, 30), (Cut.ODD, 41))
    with pytest.raises(ConfigError):
        parse_scan("middle:3")


def test_simulate_dual_writes_everything(tmp_path, capsys):
    cfg = write(tmp_path / "c.ini", SHORT_DUAL)
    out = tmp_path / "run"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    for name in ("telemetry.csv", "plan.csv", "manifest.json"):
        assert (out / name).stat().st_size > 0
    report = {p.name for p in (out / "report").iterdir()}
    assert {"percentages.csv", "histograms.csv", "osnr_profile.csv", "time_evolution.csv"} <= report
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["mode"] == "dual" and manifest["master_seed"] == 20190901
    rows = list(csv.reader(io.StringIO((out / "telemetry.csv").read_text())))
    assert len(rows) == 1 + 2 * 80


def test_simulate_scan_and_seed(tmp_path):
    cfg = write(tmp_path / "c.ini", SHORT_SCAN)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "5"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "5"]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "6"]) == 0
    a, b, c = ((tmp_path / d / "telemetry.csv").read_bytes() for d in "abc")
    assert a == b != c
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert [s["slot"] for s in manifest["steps"]] == [30, 41, 52]
    assert manifest["master_seed"] == 5


def test_output_dir_from_environment(tmp_path, monkeypatch):
    cfg = write(tmp_path / "c.ini", SHORT_DUAL)
    monkeypatch.setenv("FSOFEEDER_OUT", str(tmp_path / "env_out"))
    assert main(["simulate", "--config", cfg]) == 0
    assert (tmp_path / "env_out" / "telemetry.csv").exists()


def test_simulate_config_errors(tmp_path, capsys):
    bad = write(tmp_path / "bad.ini", "[campaign]\nmodee = dual\n")
    assert main(["simulate", "--config", bad, "--out", str(tmp_path)]) == 2
    assert "modee" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.ini")]) == 2
    parity = write(tmp_path / "p.ini", "[campaign]\nscan = even:31\n")
    assert main(["simulate", "--config", parity, "--out", str(tmp_path)]) == 2


def test_simulate_io_error(tmp_path):
    cfg = write(tmp_path / "c.ini", SHORT_DUAL)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--config", cfg, "--out", str(blocker / "sub")]) == 3


def test_analyze_fixture(tmp_path, capsys):
    log = write(tmp_path / "t.csv", fixture_rows(60, 39, 1))
    out = tmp_path / "rep"
    assert main(["analyze", log, "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "percentages.csv", encoding="utf-8")))
    assert [(r["valid_pct"], r["uncorrected_pct"], r["lost_pct"]) for r in rows] == [("60.0", "39.0", "1.0")]


def test_analyze_errors(tmp_path, capsys):
    empty = write(tmp_path / "e.csv", "")
    assert main(["analyze", empty, "--out", str(tmp_path / "r")]) == 2
    text = fixture_rows(3, 0, 0) + "0.5,30,193600,DP16QAM,0.001,-4,0,1\n"
    bad = write(tmp_path / "b.csv", text)
    assert main(["analyze", bad, "--out", str(tmp_path / "r")]) == 2
    assert "b.csv:5" in capsys.readouterr().err
    assert main(["analyze", str(tmp_path / "nope.csv")]) == 3


def test_analyze_partial(tmp_path):
    log = write(tmp_path / "t.csv", fixture_rows(5, 0, 0))
    assert main(["analyze", log, "--out", str(tmp_path / "r"), "--expect-slots", "30,31"]) == 1


def test_modem_curve(tmp_path, capsys):
    out16 = tmp_path / "16.csv"
    outq = tmp_path / "q.csv"
    assert main(["modem-curve", "DP16QAM", "--out", str(out16)]) == 0
    assert main(["modem-curve", "DPQPSK", "--out", str(outq)]) == 0
    c16 = [(float(r["osnr_db"]), float(r["ber"])) for r in csv.DictReader(open(out16))]
    cq = [(float(r["osnr_db"]), float(r["ber"])) for r in csv.DictReader(open(outq))]
    assert c16[0][0] == 12.0 and c16[-1][0] == 25.0 and len(c16) == 131
    crossing = [o for o, b in c16 if 2e-2 <= b <= 3e-2]
    assert crossing and all(abs(o - 19.0) <= 0.5 for o in crossing)
    assert all(bq < b16 for (_, b16), (_, bq) in zip(c16, cq))

    assert main(["modem-curve", "DP8QAM", "--range", "10:12"]) == 0
    captured = capsys.readouterr()
    assert "uncalibrated" in captured.err
    assert captured.out.startswith("osnr_db,ber\n")
    assert main(["modem-curve", "DP64QAM"]) == 2


def test_parse_targets():
    t = parse_targets("60,39,1;99,0.5,0.5")
    assert t.qam16 == (60.0, 39.0, 1.0) and t.qpsk == (99.0, 0.5, 0.5)
    assert parse_targets("100,0,0;").qpsk is None
    with pytest.raises(ValueError):
        parse_targets("1,2")


def test_calibrate_degenerate_target(tmp_path, capsys):
    cfg = write(tmp_path / "c.ini", "[campaign]\ndwell_s = 5\n")
    out = tmp_path / "fit.ini"
    assert main(["calibrate", "--config", cfg, "--targets", "100,0,0;", "--out", str(out)]) == 0
    fitted = load_config(out)
    assert fitted["turbulence"]["scintillation_index"] == pytest.approx(0.0, abs=1e-6)
    assert fitted["campaign"]["mode"] == "dual"


def test_calibrate_infeasible_targets(tmp_path, capsys):
    assert main(["calibrate", "--targets", "40,10,50", "--out", str(tmp_path / "x.ini")]) == 4
    assert "Lost share exceeds" in capsys.readouterr().err
    assert not (tmp_path / "x.ini").exists()
    assert main(["calibrate", "--targets", "40,10", "--out", str(tmp_path / "x.ini")]) == 2
