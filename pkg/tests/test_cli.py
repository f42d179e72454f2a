import csv
import io
import json
import subprocess
import sys

import pytest

from essa import cli
from essa.montecarlo import CSV_COLUMNS, ScenarioConfig


def _run(*argv, env=None):
    return subprocess.run([sys.executable, "-m", "essa", *argv], capture_output=True,
                          text=True, env=env)


def test_profiles_validate():
    for name in cli.PROFILES:
        cli.profile_config(name)


def test_paper_profile_values():
    cfg = cli.profile_config("paper")
    assert (cfg.phy.n, cfg.phy.s, cfg.phy.L0, cfg.code.N, cfg.code.K) == (30000, 25, 3050, 1000, 100)
    assert (cfg.rx.W, cfg.rx.Imax, cfg.rx.delta, cfg.rx.list_max) == (100, 50, 0, 256)
    g = cli.profile_config("genie")
    assert g.rx.genie and g.phy.L0 == 0


def test_flags_override_profile():
    args, cfg = cli.parse_and_validate(["run", "--profile", "paper", "--ka", "75", "--ebn0-db", "3",
                                        "--frames", "100", "--seed", "7"])
    assert (cfg.Ka, cfg.ebn0_db, cfg.frames, cfg.master_seed) == (75, 3.0, 100, 7)
    assert args.format == "json"


def test_genie_flag_drops_preamble():
    _, cfg = cli.parse_and_validate(["run", "--genie"])
    assert cfg.rx.genie and cfg.phy.L0 == 0


def test_env_seed_overrides_flag(monkeypatch):
    monkeypatch.setenv("ESSA_SEED", "99")
    _, cfg = cli.parse_and_validate(["run", "--seed", "7"])
    assert cfg.master_seed == 99


@pytest.mark.parametrize("argv", [
    ["run", "--spreading", "25", "--n", "1000", "--preamble-len", "3050"],
    ["run", "--w", "0"],
    ["run", "--list-max", "100"],
    ["run", "--frames", "0"],
    ["minsnr", "--trace", "t.jsonl"],
    ["sweep", "--axis", "bogus", "--values", "1"],
    ["sweep", "--axis", "ka", "--values", ""],
    ["run", "--profile", "nope"],
])
def test_usage_errors_exit_nonzero(argv, capsys):
    with pytest.raises(SystemExit) as e:
        cli.parse_and_validate(argv)
    assert e.value.code == 2


def test_run_writes_json_that_parses_back(tmp_path):
    out = tmp_path / "r.json"
    assert cli.main(["run", "--profile", "ci", "--frames", "3", "--seed", "4", "--out", str(out),
                     "--jobs", "1"]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1 and doc["command"] == "run"
    cfg = ScenarioConfig.from_dict(doc["config"])
    assert cfg == cli.profile_config("ci", frames=3, master_seed=4)
    assert 0.0 <= doc["report"]["pupe"] <= 1.0


def test_run_csv_and_trace(tmp_path):
    trace = tmp_path / "t.jsonl"
    out = tmp_path / "r.csv"
    assert cli.main(["run", "--profile", "ci", "--frames", "2", "--format", "csv",
                     "--trace", str(trace), "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 1 and list(rows[0]) == CSV_COLUMNS
    recs = [json.loads(x) for x in trace.read_text().splitlines()]
    assert recs[0] == {"frame": 0} and {"frame": 1} in recs


def test_sweep_three_rows(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--profile", "ci", "--genie", "--axis", "ka", "--values", "2,3,4",
                     "--target-pupe", "0.05", "--frames", "10", "--lo-db", "-4", "--hi-db", "12",
                     "--tol-db", "0.5", "--jobs", "1", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert [r["axis_value"] for r in rows] == ["2", "3", "4"]
    assert all(float(r["pupe"]) <= 0.05 for r in rows)


def test_minsnr_bracket_error_exit_code():
    assert cli.main(["minsnr", "--profile", "ci", "--frames", "2", "--lo-db", "10",
                     "--hi-db", "12", "--jobs", "1"]) == 3


def test_module_entry_point_selftest():
    r = _run("selftest")
    assert r.returncode == 0
    assert "FAIL" not in r.stdout and r.stdout.count("PASS") >= 20


def test_module_entry_point_usage_error():
    r = _run("run", "--spreading", "25", "--n", "1000", "--preamble-len", "3050")
    assert r.returncode == 2 and "does not fit" in r.stderr
