import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcsft.experiment import (ConfigError, ExperimentConfig, crossing, curve, expand_gates, fit_power_law,
                              job_seed, log_grid, parse_gate, pseudothreshold, read_csv, rows_to_csv, run)

CONFIG = """
[experiment]
protocol = memory
gate = H1           ; logical Hadamard on qubit 1
inputs = 0,+i,0
p_grid = 1e-3, 3e-3
shots = 3000
seed = 11
"""


def test_power_law_fit_exact():
    ps = log_grid(1e-4, 1e-3, 5)
    fit = fit_power_law([(p, 200 * p ** 2) for p in ps])
    assert np.isclose(fit.a, 200, rtol=1e-6) and np.isclose(fit.nu, 2, atol=1e-6)


def test_power_law_fit_with_cubic_correction():
    ps = [p for p in log_grid(1e-5, 1e-3, 5) if p < 1e-3]
    fit = fit_power_law([(p, 200 * p ** 2 + 2000 * p ** 3) for p in ps])
    assert abs(fit.nu - 2) < 0.02


@settings(max_examples=40)
@given(st.floats(1, 1e4), st.floats(1.0, 3.0))
def test_power_law_fit_recovers_parameters(a, nu):
    ps = log_grid(1e-5, 1e-3, 4)
    fit = fit_power_law([(p, a * p ** nu, 0.1 * a * p ** nu) for p in ps])
    assert np.isclose(fit.nu, nu, atol=1e-6) and np.isclose(fit.a, a, rtol=1e-5)
    assert fit.chi2_red is not None and not fit.poor


def test_fit_needs_points():
    with pytest.raises(ValueError):
        fit_power_law([(1e-3, 0.0), (2e-3, 1e-5)])


def test_crossing_closed_form():
    ps = np.geomspace(1e-3, 5e-2, 400)
    c = crossing([(p, 200 * p ** 2, 0.0) for p in ps], 3)
    exact = (203 - np.sqrt(203 ** 2 - 12)) / 2     # 200 p^2 = 1 - (1 - p)^3
    assert c.bracketed and abs(c.value - exact) / exact < 1e-3
    lo, hi = pseudothreshold([(p, 200 * p ** 2, 0.0) for p in ps], 1)
    assert abs(lo.value - 1 / 200) / (1 / 200) < 1e-3
    assert hi.value == c.value


def test_crossing_bounds_and_open_interval():
    ps = np.geomspace(1e-3, 5e-2, 40)
    c = crossing([(p, 200 * p ** 2, 20 * p ** 2) for p in ps], 3)
    assert c.low < c.value < c.high
    open_ = crossing([(p, p ** 2, 0.0) for p in ps], 3)
    assert not open_.bracketed and open_.high == float("inf")


def test_log_grid_and_gates():
    g = log_grid(3e-4, 3e-3, 5)
    assert len(g) == 6 and g[0] == 3e-4 and g[-1] == 3e-3
    assert expand_gates("CX*") == ["CX01", "CX02", "CX10", "CX12", "CX20", "CX21"]
    assert expand_gates("S*") == ["S0", "S1", "S2"]
    assert parse_gate("EC") is None and parse_gate("CX12").targets == (1, 2)
    for bad in ("Q1", "CX11", "H"):
        with pytest.raises(ConfigError):
            parse_gate(bad)


@pytest.mark.parametrize("text", [
    "[experiment]\nprotocol = memory\ngate = H0\np_grid = 1e-3\nshots = 0\n",
    "[experiment]\nprotocol = memory\ngate = H0\np_grid = 2e-3, 1e-3\nshots = 10\n",
    "[experiment]\nprotocol = memory\ngate = H0\np_grid = 1.5\nshots = 10\n",
    "[experiment]\nprotocol = teleport\ngate = H0\np_grid = 1e-3\nshots = 10\n",
    "[experiment]\nprotocol = memory\ngate = T0\np_grid = 1e-3\nshots = 10\n",
    "[experiment]\nprotocol = magic_rus\ngate = H0\np_grid = 1e-3\nshots = 10\n",
    "[experiment]\nprotocol = memory\ngate = H0\nshots = 10\n",
    "[other]\nx = 1\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(text)


def test_config_parsing():
    cfg = ExperimentConfig.from_text(CONFIG)
    assert cfg.gates == ["H1"] and cfg.p_grid == [1e-3, 3e-3] and cfg.gate_qubits == 1
    cfg.shots_exponent = 2
    assert cfg.shots_at(1e-3) == 27000 and cfg.shots_at(3e-3) == 3000
    assert job_seed(11, 0, 1) == job_seed(11, 0, 1) != job_seed(11, 1, 0)


def test_run_is_reproducible(tmp_path):
    cfg = ExperimentConfig.from_text(CONFIG)
    a = rows_to_csv(run(cfg))
    b = rows_to_csv(run(cfg, jobs=2))
    assert a == b
    path = tmp_path / "r.csv"
    path.write_text(a)
    rows = read_csv(path)
    assert [r["p"] for r in rows] == [1e-3, 3e-3]
    pts = curve(rows)    # a single input label doubles as the curve
    assert len(pts) == 2 and all(0 <= y < 0.05 for _, y, _ in pts)


def test_run_averages_inputs():
    cfg = ExperimentConfig("gadget", "S*", [2e-3], 2000, seed=2)
    rows = run(cfg)
    assert [r["gate"] for r in rows[:3]] == ["S0", "S1", "S2"]
    avg = rows[-1]
    assert avg["input"] == "avg" and avg["shots"] == 6000
    assert avg["failures"] == sum(r["failures"] for r in rows[:3])


def test_run_magic_protocols():
    rus = run(ExperimentConfig("magic_rus", "0", [1e-3], 4, seed=1))
    assert rus[0]["input"] == "H" and 0 <= rus[0]["accept"] <= 1
    det = run(ExperimentConfig("magic_deterministic", "0", [1e-4, 1e-3], 4, seed=1, q=1e-3))
    assert len(det) == 2 and all(r["shots"] == 4 for r in det)
