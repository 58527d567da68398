import subprocess
import sys

from lcsft import cli, faults
from lcsft.faults import PairReport


def write_config(tmp_path, body):
    path = tmp_path / "exp.ini"
    path.write_text("[experiment]\n" + body)
    return str(path)


def test_synth_writes_circuit(tmp_path, capsys):
    out = tmp_path / "h0.txt"
    assert cli.main(["synth", "--gate", "H0", "--flavor", "bare", "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("QUBITS 15") and text.count("YCY") == 3


def test_analyze(capsys):
    assert cli.main(["analyze", "--gate", "S1"]) == 0
    out = capsys.readouterr().out
    assert "distinguishable at t=1: True" in out


def test_validation_failures_exit_2(tmp_path, capsys):
    assert cli.main(["run"]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.ini")]) == 2
    bad = write_config(tmp_path, "protocol = memory\ngate = H0\np_grid = 1e-3\nshots = 0\n")
    assert cli.main(["run", "--config", bad]) == 2
    assert cli.main(["synth", "--gate", "EC"]) == 2
    assert cli.main(["synth", "--gate", "CX00"]) == 2
    assert cli.main(["bogus"]) == 2
    assert cli.main(["fit", "--input", str(tmp_path / "none.csv")]) == 2
    assert cli.main(["--help"]) == 0


def test_run_fit_threshold(tmp_path, capsys):
    cfg = write_config(tmp_path, "protocol = memory\ngate = EC\ninputs = +,0,0\n"
                                 "p_min = 2e-3\np_max = 2e-2\nper_decade = 2\nshots = 4000\nseed = 5\n")
    out = tmp_path / "r.csv"
    assert cli.main(["run", "--config", cfg, "--out", str(out), "--jobs", "2"]) == 0
    assert out.read_text().splitlines()[0].startswith("protocol,gate,input,p")
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "s.csv"), "--seed", "5"]) == 0
    assert (tmp_path / "s.csv").read_text() == out.read_text()
    assert cli.main(["fit", "--input", str(out)]) == 2          # 3 points are too few for a fit
    assert cli.main(["threshold", "--input", str(out)]) == 0
    text = capsys.readouterr().out
    assert "p_minus (n_G=1)" in text and "p_plus (3 qubits)" in text


def test_self_test_passes(capsys):
    assert cli.main(["analyze", "--self-test"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 11


def test_self_test_failure_exit_3(monkeypatch, capsys):
    monkeypatch.setattr(faults, "classify_fault_pairs", lambda *a, **k: PairReport(0, 0, 0))
    assert cli.main(["analyze", "--self-test"]) == 3
    assert "FAIL pairs" in capsys.readouterr().out


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "lcsft.cli", "synth", "--gate", "S2"], capture_output=True, text=True)
    assert res.returncode == 0 and "ZCZ" in res.stdout
