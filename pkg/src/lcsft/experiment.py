"""Batch runner, power-law fits and pseudothresholds.

A run is described by an INI file with one ``[experiment]`` section::

    [experiment]
    protocol = memory            ; memory | gadget | magic_deterministic | magic_rus
    gate = H0                    ; EC, H0..H2, S0..S2, CX01, ..., or H* / S* / CX* for all targets
    inputs = average             ; average | one full state spec such as "+,0,0"
    p_min = 3e-4
    p_max = 3e-3
    per_decade = 5               ; or give an explicit list: p_grid = 1e-4, 2e-4
    shots = 100000               ; shots per (gate, input, p) job at the largest p
    shots_exponent = 2           ; optional: shots grow as (p_max / p)^exponent
    seed = 1
    out = results.csv

Results are CSV rows (protocol, gate, input, p, failures, shots, p_L, stderr,
accept); rows with input ``avg`` hold the curve averaged over input states.
"""

from __future__ import annotations

import configparser
import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .code import StabilizerCode, lcs_15_3_3
from .encoder import parse_state_spec
from .synth import GateSpec


PROTOCOLS = ("memory", "gadget", "magic_deterministic", "magic_rus")
COLUMNS = ("protocol", "gate", "input", "p", "failures", "shots", "p_L", "stderr", "accept")
CHI2_LIMIT = 5.0


class ConfigError(ValueError):
    pass


def parse_gate(label: str) -> GateSpec | None:
    """``EC`` -> None; ``H0``, ``S2``, ``CX01`` -> GateSpec."""
    label = label.strip()
    if label.upper() == "EC":
        return None
    for kind in ("CX", "H", "S", "T"):
        if label.startswith(kind) and label[len(kind):].isdigit():
            try:
                return GateSpec(kind, tuple(int(c) for c in label[len(kind):]))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
    raise ConfigError(f"cannot parse gate label {label!r}")


def expand_gates(label: str) -> list[str]:
    """``H*`` -> H0, H1, H2; ``CX*`` -> all six ordered pairs; other labels unchanged."""
    label = label.strip()
    if label.endswith("*"):
        kind = label[:-1]
        if kind in ("H", "S", "T"):
            return [f"{kind}{i}" for i in range(3)]
        if kind == "CX":
            return [f"CX{i}{j}" for i in range(3) for j in range(3) if i != j]
        raise ConfigError(f"cannot expand gate label {label!r}")
    return [label]


def log_grid(p_min: float, p_max: float, per_decade: int) -> list[float]:
    """Log-spaced grid including both ends (rounded to 3 significant digits)."""
    if not 0 < p_min < p_max:
        raise ConfigError("need 0 < p_min < p_max")
    n = int(round(np.log10(p_max / p_min) * per_decade)) + 1
    return [float(f"{p:.3g}") for p in np.geomspace(p_min, p_max, n)]


@dataclass
class ExperimentConfig:
    protocol: str
    gate: str
    p_grid: list[float]
    shots: int
    seed: int = 0
    inputs: str = "average"
    out: str | None = None
    n_g: int | None = None
    rus_ec: str = "both"
    shots_exponent: float = 0.0
    q: float | None = None         # magic_deterministic: sampling rate (default: largest p)

    def __post_init__(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}")
        if not self.p_grid or any(p <= 0 or p >= 1 for p in self.p_grid):
            raise ConfigError("p grid must be non-empty with 0 < p < 1")
        if any(b <= a for a, b in zip(self.p_grid, self.p_grid[1:])):
            raise ConfigError("p grid must be strictly ascending")
        if self.shots <= 0:
            raise ConfigError("shots must be positive")
        if self.protocol.startswith("magic"):
            if not self.gate.strip().isdigit():
                raise ConfigError("magic-state protocols take a logical index as gate")
        else:
            for g in expand_gates(self.gate):
                spec = parse_gate(g)
                if spec is not None and spec.kind == "T":
                    raise ConfigError("the T gate is non-Clifford; use the magic-state protocols")
        if self.rus_ec not in ("flagged", "unflagged", "both"):
            raise ConfigError("rus_ec must be flagged, unflagged or both")
        if self.shots_exponent < 0:
            raise ConfigError("shots_exponent must be non-negative")
        if self.inputs != "average":
            try:
                parse_state_spec(self.inputs, 3)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.q is not None and not 0 < self.q < 1:
            raise ConfigError("q must lie in (0, 1)")

    @property
    def gates(self) -> list[str]:
        return expand_gates(self.gate)

    @property
    def spec(self) -> GateSpec | None:
        """Gate of the first expanded label (all expanded labels share kind and width)."""
        return None if self.protocol.startswith("magic") else parse_gate(self.gates[0])

    def shots_at(self, p: float) -> int:
        return int(round(self.shots * (self.p_grid[-1] / p) ** self.shots_exponent))

    @property
    def gate_qubits(self) -> int:
        """Reference gate width for the lower pseudothreshold (1 for EC and single-qubit gates)."""
        if self.n_g is not None:
            return self.n_g
        s = self.spec
        return 2 if s is not None and s.kind == "CX" else 1

    @classmethod
    def from_text(cls, text: str) -> ExperimentConfig:
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config parse error: {exc}") from exc
        if "experiment" not in cp:
            raise ConfigError("missing [experiment] section")
        sec = cp["experiment"]
        try:
            if "p_grid" in sec:
                grid = [float(v) for v in sec["p_grid"].replace(",", " ").split()]
            else:
                grid = log_grid(float(sec["p_min"]), float(sec["p_max"]), int(sec.get("per_decade", "5")))
            return cls(
                protocol=sec["protocol"].strip(),
                gate=sec.get("gate", "EC").strip(),
                p_grid=grid,
                shots=int(float(sec["shots"])),
                seed=int(sec.get("seed", "0")),
                inputs=sec.get("inputs", "average").strip(),
                out=sec.get("out"),
                n_g=int(sec["n_g"]) if "n_g" in sec else None,
                rus_ec=sec.get("rus_ec", "both").strip(),
                shots_exponent=float(sec.get("shots_exponent", "0")),
                q=float(sec["q"]) if "q" in sec else None,
            )
        except KeyError as exc:
            raise ConfigError(f"missing key {exc.args[0]}") from exc
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        return cls.from_text(text)


# running --------------------------------------------------------------------------------------

def job_seed(seed: int, *key: int) -> int:
    """Independent seed for one (input, p) job."""
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


def _input_list(cfg: ExperimentConfig, code: StabilizerCode, gate: str) -> list[str]:
    from .protocols import input_states

    if cfg.inputs != "average":
        return [",".join(parse_state_spec(cfg.inputs, code.k))]
    return [",".join(labels) for labels in input_states(code, parse_gate(gate))]


def _memory_job(args) -> tuple[int, int]:
    from .protocols import memory_experiment

    gate, state, p, shots, seed = args
    _, _, fails = memory_experiment(lcs_15_3_3(), parse_gate(gate), state, p, shots, seed)
    return fails, shots


def _gadget_job(args) -> tuple[int, int]:
    from .protocols import gadget_failure_rate

    gate, p, shots, seed = args
    return gadget_failure_rate(lcs_15_3_3(), parse_gate(gate), p, shots, seed)


def _rus_job(args) -> tuple[float, float]:
    from .magic import magic_rus

    index, p, trials, seed, rus_ec = args
    return magic_rus(lcs_15_3_3(), index, p, trials, seed, rus_ec)


def _map(fn, jobs: list, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _rate_row(cfg, state, p, fails, shots, accept="") -> dict:
    rate = fails / shots
    return {"protocol": cfg.protocol, "gate": cfg.gate, "input": state, "p": p, "failures": fails,
            "shots": shots, "p_L": rate, "stderr": float(np.sqrt(rate * (1 - rate) / shots)), "accept": accept}


def run(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """Run every (gate, input, p) job of ``cfg``; rows come back in a fixed order.

    Every job gets its own seed derived from the config seed and the job's
    position, so results do not depend on ``jobs``.
    """
    code = lcs_15_3_3()
    rows: list[dict] = []
    if cfg.protocol in ("memory", "gadget"):
        combos = []
        for g in cfg.gates:
            states = _input_list(cfg, code, g) if cfg.protocol == "memory" else ["-"]
            combos.extend((g, s) for s in states)
        keys = [(c, j) for c in range(len(combos)) for j in range(len(cfg.p_grid))]
        if cfg.protocol == "memory":
            args = [(combos[c][0], combos[c][1], cfg.p_grid[j], cfg.shots_at(cfg.p_grid[j]), job_seed(cfg.seed, c, j))
                    for c, j in keys]
            out = _map(_memory_job, args, jobs)
        else:
            args = [(combos[c][0], cfg.p_grid[j], cfg.shots_at(cfg.p_grid[j]), job_seed(cfg.seed, c, j))
                    for c, j in keys]
            out = _map(_gadget_job, args, jobs)
        res = dict(zip(keys, out))
        for c, (g, s) in enumerate(combos):
            for j, p in enumerate(cfg.p_grid):
                row = _rate_row(cfg, s, p, *res[(c, j)])
                row["gate"] = g
                rows.append(row)
        if len(combos) > 1:
            for j, p in enumerate(cfg.p_grid):
                f = sum(res[(c, j)][0] for c in range(len(combos)))
                n = sum(res[(c, j)][1] for c in range(len(combos)))
                rows.append(_rate_row(cfg, "avg", p, f, n))
    elif cfg.protocol == "magic_rus":
        idx = int(cfg.gate)
        args = [(idx, p, cfg.shots, job_seed(cfg.seed, 0, j), cfg.rus_ec) for j, p in enumerate(cfg.p_grid)]
        for p, (fid, acc) in zip(cfg.p_grid, _map(_rus_job, args, jobs)):
            n_acc = int(round(acc * cfg.shots))
            infid = 1 - fid if n_acc else float("nan")
            rows.append({"protocol": cfg.protocol, "gate": cfg.gate, "input": "H", "p": p,
                         "failures": infid * n_acc if n_acc else 0.0, "shots": n_acc, "p_L": infid,
                         "stderr": float("nan"), "accept": acc})
    else:
        from .magic import sample_deterministic

        q = cfg.q if cfg.q is not None else cfg.p_grid[-1]
        smp = sample_deterministic(code, int(cfg.gate), q, cfg.shots, cfg.seed)
        for p in cfg.p_grid:
            m, se = smp.failure(p)
            rows.append({"protocol": cfg.protocol, "gate": cfg.gate, "input": "0", "p": p,
                         "failures": m * len(smp), "shots": len(smp), "p_L": m, "stderr": se, "accept": ""})
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def read_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        out = []
        for r in csv.DictReader(fh):
            for k in ("p", "failures", "p_L", "stderr"):
                r[k] = float(r[k]) if r.get(k) not in (None, "") else float("nan")
            r["shots"] = int(float(r["shots"]))
            out.append(r)
        return out


def curve(rows: list[dict], state: str = "avg") -> list[tuple[float, float, float]]:
    """(p, p_L, stderr) sorted by p for one input label (``avg`` by default)."""
    pts = [(r["p"], r["p_L"], r["stderr"]) for r in rows if r["input"] == state]
    if not pts and state == "avg":
        labels = {r["input"] for r in rows}
        if len(labels) == 1:
            pts = [(r["p"], r["p_L"], r["stderr"]) for r in rows]
    return sorted(pts)


# fitting ----------------------------------------------------------------------------------------

@dataclass
class FitResult:
    a: float
    nu: float
    a_err: float
    nu_err: float
    points: list[tuple[float, float]]
    chi2_red: float | None = None

    @property
    def poor(self) -> bool:
        return self.chi2_red is not None and self.chi2_red > CHI2_LIMIT

    def __str__(self) -> str:
        s = f"a = {self.a:.4g} +- {self.a_err:.2g}, nu = {self.nu:.4f} +- {self.nu_err:.3f}"
        if self.chi2_red is not None:
            s += f", chi2/dof = {self.chi2_red:.2f}" + (" (poor fit)" if self.poor else "")
        return s


def fit_power_law(points, n_points: int = 5) -> FitResult:
    """Fit p_L = a p^nu by least squares in log-log over the lowest-p nonzero points.

    ``points`` holds (p, p_L) or (p, p_L, stderr) tuples.
    """
    pts = sorted(tuple(pt) for pt in points if pt[1] > 0 and np.isfinite(pt[1]))
    if len(pts) < n_points:
        raise ValueError(f"need at least {n_points} points with p_L > 0, got {len(pts)}")
    pts = pts[:n_points]
    x = np.log([pt[0] for pt in pts])
    y = np.log([pt[1] for pt in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    nu, ln_a = coef
    resid = y - A @ coef
    dof = len(x) - 2
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    a = float(np.exp(ln_a))
    chi2 = None
    if all(len(pt) > 2 and np.isfinite(pt[2]) and pt[2] > 0 for pt in pts):
        sig = np.array([pt[2] / pt[1] for pt in pts])
        chi2 = float(np.sum((resid / sig) ** 2) / dof)
    return FitResult(a, float(nu), a * float(np.sqrt(cov[1, 1])), float(np.sqrt(cov[0, 0])),
                     [(pt[0], pt[1]) for pt in pts], chi2)


# pseudothresholds -----------------------------------------------------------------------------

def physical_failure(p, n: int):
    """Probability that at least one of ``n`` unencoded qubits fails."""
    return 1 - (1 - np.asarray(p, dtype=float)) ** n


@dataclass
class Crossing:
    value: float | None          # None if the curve never crosses the reference on the grid
    low: float                   # bounds from the +-stderr envelopes, or the open interval
    high: float
    bracketed: bool

    def __str__(self) -> str:
        if not self.bracketed:
            return f"open interval ({self.low:.3g}, {self.high:.3g})"
        return f"{self.value:.4g} [{self.low:.3g}, {self.high:.3g}]"


def _cross(ps, ys, n: int) -> float | None:
    g = np.asarray(ys) - physical_failure(ps, n)
    for i in range(len(ps) - 1):
        if g[i] < 0 <= g[i + 1]:
            return float(ps[i] + (ps[i + 1] - ps[i]) * g[i] / (g[i] - g[i + 1]))
    return None


def crossing(curve_pts, n: int) -> Crossing:
    """Where p_L first rises through 1-(1-p)^n, by linear interpolation of the bracketing points."""
    pts = sorted(curve_pts)
    ps = np.array([pt[0] for pt in pts])
    ys = np.array([pt[1] for pt in pts])
    se = np.array([pt[2] if len(pt) > 2 and np.isfinite(pt[2]) else 0.0 for pt in pts])
    mid = _cross(ps, ys, n)
    if mid is None:
        below = bool(np.all(ys < physical_failure(ps, n)))
        return Crossing(None, float(ps[-1]) if below else 0.0, float("inf") if below else float(ps[0]), False)
    hi = _cross(ps, ys - se, n)     # lower curve crosses later
    lo = _cross(ps, ys + se, n)
    return Crossing(mid, lo if lo is not None else mid, hi if hi is not None else mid, True)


def pseudothreshold(curve_pts, n_g: int) -> tuple[Crossing, Crossing]:
    """(p_minus, p_plus): crossings with the n_g-qubit and the 3-qubit references."""
    return crossing(curve_pts, n_g), crossing(curve_pts, 3)
