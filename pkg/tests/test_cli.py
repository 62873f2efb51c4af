"""CLI verbs, flags, config files, exit codes."""

import csv
import subprocess
import sys

import pytest

from heartmesh.cli import main


def run_cli(*argv):
    return main(list(argv))


def test_run_verb_writes_csvs(tmp_path, capsys):
    code = run_cli("run", "--n", "16", "--rate", "10", "--runs", "2",
                   "--horizon", "5", "--seed", "7", "--out", str(tmp_path),
                   "--quiet")
    assert code == 0
    assert (tmp_path / "details.csv").exists()
    assert (tmp_path / "summary.csv").exists()
    with open(tmp_path / "details.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert rows[0]["k"] == "4"  # round(sqrt(16))


def test_run_verb_accepts_config_file(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n = 16\nrate = 1.0  # %/min\nruns = 1\nhorizon = 4\n")
    code = run_cli("run", "--config", str(cfg), "--out", str(tmp_path / "o"),
                   "--quiet")
    assert code == 0


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("n = 16\nrate = 1.0\nruns = 1\nhorizon = 4\n")
    out = tmp_path / "o"
    code = run_cli("run", "--config", str(cfg), "--n", "25",
                   "--out", str(out), "--quiet")
    assert code == 0
    with open(out / "details.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["n"] == "25"


def test_configuration_error_is_exit_1(tmp_path, capsys):
    assert run_cli("run", "--n", "16", "--rate", "-1",
                   "--out", str(tmp_path), "--quiet") == 1
    assert "configuration error" in capsys.readouterr().err


def test_unknown_config_key_is_exit_1(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nodes = 16\n")
    assert run_cli("run", "--config", str(cfg), "--quiet") == 1


def test_runtime_failure_is_exit_2(tmp_path, capsys):
    assert run_cli("plot-data", "--summary", str(tmp_path / "missing.csv"),
                   "--out", str(tmp_path)) == 2


def test_large_n_gated_behind_flag(tmp_path, capsys):
    # n >= 10^4 simulations are long-running and need explicit confirmation
    code = run_cli("run", "--n", "10000", "--runs", "1", "--horizon", "1",
                   "--out", str(tmp_path), "--quiet")
    assert code == 1
    assert "--allow-large" in capsys.readouterr().err


def test_sweep_verb_cross_product(tmp_path):
    code = run_cli("sweep", "--n", "16,25", "--rate", "1,10",
                   "--protocol", "simple_p2p", "--runs", "1",
                   "--horizon", "4", "--out", str(tmp_path), "--quiet")
    assert code == 0
    with open(tmp_path / "summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4


def test_graph_verb_stdout(capsys):
    code = run_cli("graph", "--n", "9", "--k", "4", "--topology", "lattice",
                   "--seed", "0", "--out", "-")
    assert code == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "# n=9 kind=lattice k=4 seed=0"
    assert len(lines) == 37


def test_graph_verb_file(tmp_path):
    out = tmp_path / "g.edges"
    code = run_cli("graph", "--n", "9", "--k", "4", "--topology", "lattice",
                   "--out", str(out))
    assert code == 0
    assert out.read_text().startswith("# n=9 kind=lattice")


def test_plot_data_verb(tmp_path):
    run_cli("sweep", "--n", "16", "--rate", "1,10", "--runs", "2",
            "--horizon", "4", "--out", str(tmp_path), "--quiet")
    code = run_cli("plot-data", "--summary", str(tmp_path / "summary.csv"),
                   "--out", str(tmp_path), "--group-by", "rate",
                   "--value", "load", "--scale", "log")
    assert code == 0
    assert (tmp_path / "plot_load_by_rate_log.csv").exists()


def test_acceptance_verb_is_wired():
    with pytest.raises(SystemExit) as exc:
        main(["acceptance", "--help"])
    assert exc.value.code == 0


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "heartmesh.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "run" in proc.stdout and "sweep" in proc.stdout
