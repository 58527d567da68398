"""Fault-tolerant magic-state preparation by repeated logical-Hadamard measurement.

The measurement circuit has three-qubit controlled gates, so it runs on a dense
statevector (data + measurement qubit + flag).  The syndrome rounds around it
are Clifford; they are executed as noiseless projective measurements of the
generators on the data state, with the faults of the physical extraction circuit
applied as Pauli frames (record flips and a residual data Pauli).  For Clifford
circuits with Pauli faults this is exact for any input state.

Faults come from a ``FaultPlan``: sampled location by location, or given
explicitly (exhaustive injection).  Low-p failure rates of the deterministic
protocol are estimated by importance sampling from one elevated rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .circuit import Circuit, depolarize_layer, with_noise
from .code import StabilizerCode
from .pauli import PauliOperator
from .propagation import FramePropagator
from .protocols import P_REF, gadget
from .statevector import StateVector, codespace_basis, logical_fidelity, sv_run_trajectory
from .synth import synth_magic_measure, synth_syndrome_extraction

MAX_REPS = 5
RUS_EC = ("flagged", "unflagged", "both")
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _sites(circuit: Circuit) -> list[tuple[int, int, int]]:
    """(instruction index, group, arity) for every channel location."""
    return [(s.instruction, s.group, s.arity) for s in circuit.fault_sites()]


class FaultPlan:
    """Decides which locations of which protocol segment fault.

    ``locations`` maps a segment key to its (instruction, group, arity) sites.
    Segments are asked for their faults only when they execute, so the plan also
    counts executed locations and faults (the importance weights need both).
    With ``fixed`` the faults are given explicitly; otherwise every location
    faults independently with rate p and a uniform nonidentity term.
    """

    def __init__(self, locations: dict, rng: np.random.Generator, p: float = 0.0, fixed: dict | None = None):
        self.locations = locations
        self.rng = rng
        self.p = p
        self.fixed = fixed
        self.executed = 0
        self.n_faults = 0

    def faults(self, key) -> dict:
        self.executed += len(self.locations[key])
        if self.fixed is not None:
            out = self.fixed.get(key, {})
        elif self.p <= 0:
            out = {}
        else:
            sites = self.locations[key]
            out = {}
            for j in np.nonzero(self.rng.random(len(sites)) < self.p)[0]:
                idx, g, arity = sites[int(j)]
                out[(idx, g)] = int(self.rng.integers(1, 4 ** arity))
        self.n_faults += len(out)
        return out


@dataclass
class _Round:
    """A Clifford syndrome round reduced to per-fault effects on records and data."""
    circuit: Circuit
    det_of_generator: list[int]          # detector index of every generator's ancilla
    basis: dict = field(default_factory=dict)   # (instr, group, j, "X"|"Z") -> FaultEffect

    @classmethod
    def build(cls, code: StabilizerCode, flagged: bool) -> _Round:
        c = with_noise(synth_syndrome_extraction(code, flagged), P_REF)
        prop = FramePropagator(c, list(range(code.n)))
        basis = {}
        for site in c.fault_sites():
            for j, q in enumerate(site.qubits):
                basis[(site.instruction, site.group, j, "X")] = prop.run(1 << q, 0, site.instruction + 1)
                basis[(site.instruction, site.group, j, "Z")] = prop.run(0, 1 << q, site.instruction + 1)
        step = 2 if flagged else 1
        return cls(c, [step * i for i in range(code.n_generators)], basis)

    def run(self, code: StabilizerCode, state: StateVector, faults: dict, rng) -> int:
        dets = x = z = 0
        for (idx, g), term in faults.items():
            for j in range(self.circuit.instructions[idx].arity):
                for bit, letter in ((2 * j, "X"), (2 * j + 1, "Z")):
                    if (term >> bit) & 1:
                        eff = self.basis[(idx, g, j, letter)]
                        dets ^= eff.detectors
                        x ^= eff.x
                        z ^= eff.z
        for i, gen in enumerate(code.generators):
            if state.measure_pauli(gen, rng):
                dets ^= 1 << self.det_of_generator[i]
        if x or z:
            state.apply_pauli(PauliOperator(code.n, x, z))
        return dets


@dataclass
class MagicResult:
    fidelity: float
    rounds: int
    accepted: bool
    outcomes: list[int]


class MagicProtocol:
    def __init__(self, code: StabilizerCode, logical_index: int) -> None:
        self.code = code
        self.i = logical_index
        n = code.n
        self.width = n + 2
        self.mh = {f: Circuit(self.width, list(with_noise(synth_magic_measure(code, logical_index, f), P_REF)
                                                 .instructions)) for f in (True, False)}
        self.flagged_round = _Round.build(code, True)
        self.plain_round = _Round.build(code, False)
        self.input_layer = depolarize_layer(n, range(n), P_REF)
        ec = gadget(code, None)
        self.t1 = ec.t1
        self.final = ec.final
        self.fallback = ec.fallback
        basis = codespace_basis(code)
        self.zero = basis[:, 0].copy()
        one = basis[:, 1 << logical_index]
        self.magic = np.cos(np.pi / 8) * self.zero + np.sin(np.pi / 8) * one
        self._locations: dict = {}

    # segments --------------------------------------------------------------
    def locations(self, deterministic: bool, rus_ec: str = "both") -> dict:
        key = (deterministic, rus_ec)
        if key not in self._locations:
            self._locations[key] = self._build_locations(deterministic, rus_ec)
        return self._locations[key]

    def _build_locations(self, deterministic: bool, rus_ec: str) -> dict:
        out = {("in",): _sites(self.input_layer)}
        flagged, plain = _sites(self.flagged_round.circuit), _sites(self.plain_round.circuit)
        if not deterministic:
            out[("mh", 0, True)] = _sites(self.mh[True])
            if rus_ec in ("flagged", "both"):
                out[("f", 0)] = flagged
            if rus_ec in ("unflagged", "both"):
                out[("u", 0)] = plain
            return out
        for r in range(MAX_REPS):
            out[("mh", r, True)] = _sites(self.mh[True])
            out[("mh", r, False)] = _sites(self.mh[False])
            out[("f", r)] = flagged
            out[("u", r)] = plain
        return out

    def _measure_h(self, state: StateVector, flagged: bool, faults: dict, rng) -> tuple[StateVector, int, int]:
        n = self.code.n
        big = StateVector(self.width, np.multiply.outer(state.amps, np.array([[1, 0], [0, 0]], dtype=complex)))
        t = sv_run_trajectory(self.mh[flagged], None, None, big, rng, faults)
        m = t.record[0]
        f = t.record[1] if flagged else 0
        amps = t.state.amps
        amps = np.tensordot(amps, _H, axes=([n], [1]))           # measured qubit back to Z basis (moved last)
        amps = amps[..., f, m]
        out = StateVector(n, amps.copy())
        out.amps /= out.norm
        return out, m, f

    def _ec(self, state: StateVector, r: int, plan: FaultPlan, rng) -> int:
        """Flag-based EC on the data state; returns the flagged round's detectors."""
        code = self.code
        d = self.flagged_round.run(code, state, plan.faults(("f", r)), rng)
        if d:
            s = self.plain_round.run(code, state, plan.faults(("u", r)), rng)
            corr = self.t1.lookup((d, s))
            if corr is None:
                corr = self.fallback.get(s, PauliOperator.identity(code.n))
            if not corr.is_identity:
                state.apply_pauli(corr)
        return d

    def _finish(self, state: StateVector, rng) -> float:
        """Perfect syndrome measurement and correction, then the magic-state fidelity."""
        code = self.code
        s = 0
        for i, g in enumerate(code.generators):
            s |= state.measure_pauli(g, rng) << i
        corr = self.final.get(s, self.fallback.get(s))
        if corr is not None and not corr.is_identity:
            state.apply_pauli(corr)
        return logical_fidelity(state, code, self.i)

    def _input(self, amps: np.ndarray, plan: FaultPlan) -> StateVector:
        state = StateVector(self.code.n, amps.copy())
        for (idx, g), term in plan.faults(("in",)).items():
            q = self.input_layer.instructions[idx].groups()[g][0]
            state.apply_pauli(PauliOperator.from_sparse(self.code.n, {q: "XZY"[term - 1]}))
        return state

    # protocols -------------------------------------------------------------
    def deterministic(self, plan: FaultPlan, rng) -> MagicResult:
        """Repeat M_H + EC until the outcome can be trusted (see ``accept_rule``).

        The flagged M_H circuit is used until the first flip (nontrivial flag or
        EC, or a changed outcome); afterwards the unflagged one.
        """
        state = self._input(self.zero, plan)
        outcomes: list[int] = []
        quiet: list[bool] = []
        flip_seen = False
        value = None
        for r in range(MAX_REPS):
            flagged = not flip_seen
            state, m, f = self._measure_h(state, flagged, plan.faults(("mh", r, flagged)), rng)
            d = self._ec(state, r, plan, rng)
            quiet.append(not f and not d)
            flip_seen |= not quiet[-1] or bool(outcomes and m != outcomes[-1])
            outcomes.append(m)
            value = accept_rule(outcomes, quiet)
            if value is not None:
                break
        if value:
            state.apply_pauli(self.code.logical_y(self.i))
        return MagicResult(self._finish(state, rng), len(outcomes), True, outcomes)

    def repeat_until_success(self, plan: FaultPlan, rng, rus_ec: str = "both") -> MagicResult:
        """One trial: noisy |H>, flagged M_H, one syndrome cycle; accept iff every outcome is trivial.

        ``rus_ec`` picks the cycle: the flagged round, the unflagged round, or both.
        """
        if rus_ec not in RUS_EC:
            raise ValueError(f"rus_ec must be one of {RUS_EC}")
        state = self._input(self.magic, plan)
        state, m, f = self._measure_h(state, True, plan.faults(("mh", 0, True)), rng)
        d = 0
        if rus_ec in ("flagged", "both"):
            d |= self.flagged_round.run(self.code, state, plan.faults(("f", 0)), rng)
        if rus_ec in ("unflagged", "both"):
            d |= self.plain_round.run(self.code, state, plan.faults(("u", 0)), rng)
        accepted = not (m or f or d)
        fid = self._finish(state, rng) if accepted else float("nan")
        return MagicResult(fid, 1, accepted, [m])


def accept_rule(outcomes: list[int], quiet: list[bool]) -> int | None:
    """Decision after the latest M_H round: the accepted outcome bit, or None to repeat.

    Two consecutive equal outcomes are accepted if the latest round saw a trivial
    flag and EC, or unconditionally from the fourth round on.  The last allowed
    round decides on its own outcome.
    """
    r = len(outcomes)
    if r >= 2 and outcomes[-1] == outcomes[-2] and (quiet[-1] or r >= 4):
        return outcomes[-1]
    if r >= MAX_REPS:
        return outcomes[-1]
    return None


_PROTOCOLS: dict = {}


def magic_protocol(code: StabilizerCode, logical_index: int) -> MagicProtocol:
    key = (id(code), logical_index)
    if key not in _PROTOCOLS:
        _PROTOCOLS[key] = MagicProtocol(code, logical_index)
    return _PROTOCOLS[key]


def magic_deterministic(code: StabilizerCode, logical_index: int, p: float, seed: int) -> tuple[float, int]:
    """One trajectory of the deterministic protocol: (fidelity, rounds used)."""
    proto = magic_protocol(code, logical_index)
    rng = np.random.default_rng(seed)
    res = proto.deterministic(FaultPlan(proto.locations(True), rng, p), rng)
    return res.fidelity, res.rounds


def magic_rus(code: StabilizerCode, logical_index: int, p: float, trials: int, seed: int,
              rus_ec: str = "both") -> tuple[float, float]:
    """(mean fidelity of accepted trials, acceptance rate)."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    proto = magic_protocol(code, logical_index)
    locs = proto.locations(False, rus_ec)
    fids = []
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        res = proto.repeat_until_success(FaultPlan(locs, rng, p), rng, rus_ec)
        if res.accepted:
            fids.append(res.fidelity)
    acc = len(fids) / trials
    return (float(np.mean(fids)) if fids else float("nan")), acc


@dataclass
class ImportanceSample:
    """Deterministic-protocol trajectories sampled at rate q, reweightable to any p.

    A trajectory with K faults among N executed locations has probability
    proportional to q^K (1-q)^(N-K); reweighting by the ratio for p gives an
    unbiased estimate of the mean infidelity at p.
    """
    q: float
    faults: np.ndarray        # K per trajectory
    executed: np.ndarray      # N per trajectory
    infidelity: np.ndarray    # 1 - F per trajectory

    def weights(self, p: float) -> np.ndarray:
        k, n = self.faults, self.executed
        return np.exp(k * np.log(p / self.q) + (n - k) * np.log1p(-p) - (n - k) * np.log1p(-self.q))

    def failure(self, p: float) -> tuple[float, float]:
        """(mean 1 - F at p, standard error)."""
        v = self.weights(p) * self.infidelity
        return float(v.mean()), float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0

    def __len__(self) -> int:
        return len(self.faults)


def sample_deterministic(code: StabilizerCode, logical_index: int, q: float, trajectories: int,
                         seed: int) -> ImportanceSample:
    """Run the deterministic protocol ``trajectories`` times at fault rate ``q``."""
    if not 0 < q < 1:
        raise ValueError("sampling rate q must lie in (0, 1)")
    if trajectories <= 0:
        raise ValueError("trajectories must be positive")
    proto = magic_protocol(code, logical_index)
    locs = proto.locations(True)
    k = np.empty(trajectories, dtype=np.int64)
    n = np.empty(trajectories, dtype=np.int64)
    infid = np.empty(trajectories)
    for t in range(trajectories):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        plan = FaultPlan(locs, rng, q)
        res = proto.deterministic(plan, rng)
        k[t], n[t], infid[t] = plan.n_faults, plan.executed, max(0.0, 1 - res.fidelity)
    return ImportanceSample(q, k, n, infid)
