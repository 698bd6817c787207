import csv

import pytest

from telehaptic.cli import main


def test_print_schema(capsys):
    assert main(["--print-schema"]) == 0
    assert "[scenario]" in capsys.readouterr().out


def test_no_command():
    assert main([]) == 2


def test_run_scenario_pass(tmp_path):
    sc = tmp_path / "quiet.ini"
    sc.write_text("[scenario]\nduration_ms = 2000\n[assert]\nqos = bwd, fwd\n")
    assert main(["run", "--scenario", str(sc), "--out", str(tmp_path / "o")]) == 0
    out = tmp_path / "o" / "quiet"
    for name in ("trace_run.csv", "k_run.csv", "summary_run.csv", "report_run.txt",
                 "scenario_run.ini", "checks.csv"):
        assert (out / name).exists()
    rows = list(csv.DictReader(open(out / "checks.csv")))
    assert rows and all(r["ok"] == "1" for r in rows)


def test_run_scenario_fail(tmp_path):
    sc = tmp_path / "busy.ini"
    sc.write_text("[scenario]\nduration_ms = 3000\nprotocol = no_merge\n"
                  "[cross.bwd.cbr]\nrate_kbps = 600\n[assert]\nqos = bwd\n")
    assert main(["run", "--scenario", str(sc), "--out", str(tmp_path)]) == 1


def test_run_preset_with_override(tmp_path):
    code = main(["run", "--preset", "table3", "--set", "duration_ms=2000", "--out", str(tmp_path)])
    assert code in (0, 1)
    assert (tmp_path / "table3" / "checks.csv").exists()
    assert "duration_ms = 2000" in (tmp_path / "table3" / "scenario_dpm.ini").read_text()


def test_config_errors(tmp_path):
    assert main(["run", "--preset", "table3", "--set", "bogus.key=1", "--out", str(tmp_path)]) == 2
    assert main(["run", "--scenario", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) == 2
    assert main(["run", "--preset", "table3", "--repeat", "0", "--out", str(tmp_path)]) == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--preset", "table3", "--out", str(blocker)]) == 2
    with pytest.raises(SystemExit):
        main(["run", "--preset", "nonexistent"])


def test_env_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("TELEHAPTIC_OUT", str(tmp_path))
    sc = tmp_path / "q.ini"
    sc.write_text("[scenario]\nduration_ms = 1000\n")
    assert main(["run", "--scenario", str(sc)]) == 0
    assert (tmp_path / "q" / "trace_run.csv").exists()


def test_repeat_uses_successive_seeds(tmp_path):
    sc = tmp_path / "q.ini"
    sc.write_text("[scenario]\nduration_ms = 1000\nseed = 5\n")
    assert main(["run", "--scenario", str(sc), "--repeat", "2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "q" / "seed_5").is_dir() and (tmp_path / "q" / "seed_6").is_dir()


def test_sweep(tmp_path):
    sc = tmp_path / "s.ini"
    sc.write_text("[scenario]\nduration_ms = 1500\n[cross.bwd.cbr]\nrate_kbps = 0\n")
    assert main(["sweep", "--scenario", str(sc), "--param", "r_cbr", "--values", "300,50,100",
                 "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "s-sweep-r_cbr" / "sweep.csv")))
    assert [r["value"] for r in rows if r["stream"] == "telehaptic" and r["channel"] == "bwd"] == \
        ["50", "100", "300"]


def test_empty_sweep(tmp_path):
    sc = tmp_path / "s.ini"
    sc.write_text("[scenario]\nduration_ms = 1000\n")
    assert main(["sweep", "--scenario", str(sc), "--param", "r_cbr", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "s-sweep-r_cbr" / "sweep.csv").read_text().startswith("value,label")


def test_sweep_bad_param(tmp_path):
    sc = tmp_path / "s.ini"
    sc.write_text("[scenario]\nduration_ms = 1000\n")
    assert main(["sweep", "--scenario", str(sc), "--param", "scenario.nope", "--values", "1",
                 "--out", str(tmp_path)]) == 2
