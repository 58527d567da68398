"""Dense statevector trajectories for small circuits with non-Clifford gates.

The state is kept as an ``n``-axis tensor where axis ``q`` is qubit ``q``.  Noise
channels are unravelled into Pauli trajectories: every channel location draws
one term (or none) per run.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import gates
from .circuit import MEASUREMENTS, NOISE, RESETS, Circuit, CircuitError
from .code import StabilizerCode
from .pauli import PauliOperator

MAX_QUBITS = 20
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_H = gates.UNITARIES["H"]


class StateVector:
    def __init__(self, n: int, amps: np.ndarray | None = None) -> None:
        if n > MAX_QUBITS:
            raise CircuitError(f"statevector limited to {MAX_QUBITS} qubits, got {n}")
        self.n = n
        if amps is None:
            amps = np.zeros((2,) * n, dtype=complex)
            amps[(0,) * n] = 1.0
        self.amps = amps.reshape((2,) * n)

    def copy(self) -> StateVector:
        return StateVector(self.n, self.amps.copy())

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def vector(self) -> np.ndarray:
        """Flat amplitudes with qubit 0 as the most significant index bit."""
        return self.amps.reshape(-1)

    def apply_matrix(self, u: np.ndarray, qubits) -> None:
        qs = list(qubits)
        k = len(qs)
        t = u.reshape((2,) * (2 * k))
        out = np.tensordot(t, self.amps, axes=(list(range(k, 2 * k)), qs))
        self.amps = np.moveaxis(out, list(range(k)), qs)

    def apply(self, kind: str, qubits) -> None:
        qs = list(qubits)
        sub = _controlled_block(kind)
        if sub is None:
            self.apply_matrix(gates.UNITARIES[kind], qs)
            return
        # controlled gate: only the control = 1 half changes
        c, rest = qs[0], qs[1:]
        idx = [slice(None)] * self.n
        idx[c] = 1
        half = self.amps[tuple(idx)]
        axes = [q - (q > c) for q in rest]
        k = len(rest)
        out = np.tensordot(sub.reshape((2,) * (2 * k)), half, axes=(list(range(k, 2 * k)), axes))
        self.amps[tuple(idx)] = np.moveaxis(out, list(range(k)), axes)

    def apply_pauli(self, p: PauliOperator) -> None:
        perm, fac = _pauli_action(self.n, p.x, p.z, p.phase)
        self.amps = (fac * self.amps.reshape(-1)[perm]).reshape((2,) * self.n)

    def prob_one(self, q: int) -> float:
        idx = [slice(None)] * self.n
        idx[q] = 1
        return float(np.sum(np.abs(self.amps[tuple(idx)]) ** 2))

    def measure_z(self, q: int, rng: np.random.Generator) -> int:
        p1 = self.prob_one(q)
        bit = int(rng.random() < p1)
        idx = [slice(None)] * self.n
        idx[q] = 1 - bit
        self.amps[tuple(idx)] = 0
        self.amps /= np.sqrt(p1 if bit else 1 - p1)
        return bit

    def measure_pauli(self, p: PauliOperator, rng: np.random.Generator) -> int:
        """Projective measurement of a Hermitian Pauli; returns 0 for +1, 1 for -1."""
        perm, fac = _pauli_action(self.n, p.x, p.z, p.phase)
        v = self.amps.reshape(-1)
        w = fac * v[perm]
        ev = float(np.vdot(v, w).real)
        if abs(ev) > 1 - 1e-12:          # already an eigenstate: no projection needed
            return int(ev < 0)
        p_plus = min(max((1 + ev) / 2, 0.0), 1.0)
        bit = int(rng.random() >= p_plus)
        new = v - w if bit else v + w
        self.amps = (new / np.sqrt(4 * (1 - p_plus if bit else p_plus))).reshape((2,) * self.n)
        return bit

    def reset(self, q: int, rng: np.random.Generator) -> None:
        if self.measure_z(q, rng):
            self.apply_matrix(_X, [q])


def expectation(state: StateVector, p: PauliOperator) -> float:
    if p.n != state.n:
        raise ValueError(f"Pauli on {p.n} qubits, state on {state.n}")
    perm, fac = _pauli_action(state.n, p.x, p.z, p.phase)
    v = state.amps.reshape(-1)
    return float(np.vdot(v, fac * v[perm]).real)


@lru_cache(maxsize=512)
def _pauli_action(n: int, x: int, z: int, phase: int) -> tuple[np.ndarray, np.ndarray]:
    """Gather index and factor with (P v)[i] = fac[i] * v[perm[i]] on flat amplitudes."""
    # qubit q sits at flat bit n-1-q
    xm = sum(1 << (n - 1 - q) for q in range(n) if (x >> q) & 1)
    zm = sum(1 << (n - 1 - q) for q in range(n) if (z >> q) & 1)
    idx = np.arange(1 << n, dtype=np.int64)
    perm = idx ^ xm
    sign = 1 - 2 * (np.bitwise_count(perm & zm) & 1).astype(np.int64)
    n_y = bin(x & z).count("1")
    return perm, sign * (1j ** ((phase + n_y) % 4))


@lru_cache(maxsize=None)
def _controlled_block(kind: str) -> np.ndarray | None:
    """Target block U of a gate of the form |0><0| (x) I + |1><1| (x) U on its first qubit."""
    u = gates.UNITARIES[kind]
    h = u.shape[0] // 2
    if h < 2 or not np.allclose(u[:h, :h], np.eye(h)) or np.abs(u[:h, h:]).max() > 0 or np.abs(u[h:, :h]).max() > 0:
        return None
    return u[h:, h:]


def logical_fidelity(state: StateVector, code: StabilizerCode, logical_index: int) -> float:
    """Overlap with the magic state |H> from the logical X and Z expectations."""
    x = code.logical(logical_index, "X").embed(state.n)
    z = code.logical(logical_index, "Z").embed(state.n)
    return 0.5 * (1 + (expectation(state, x) + expectation(state, z)) / np.sqrt(2))


def _noise_term(k: int, rng: np.random.Generator) -> int:
    return int(rng.integers(1, 4 ** k))


def _pauli_from_term(n: int, qubits: tuple[int, ...], term: int) -> PauliOperator:
    terms = {}
    for j, q in enumerate(qubits):
        bx, bz = (term >> (2 * j)) & 1, (term >> (2 * j + 1)) & 1
        if bx or bz:
            terms[q] = {(1, 0): "X", (0, 1): "Z", (1, 1): "Y"}[(bx, bz)]
    return PauliOperator.from_sparse(n, terms)


@dataclass
class Trajectory:
    record: list[int]
    state: StateVector

    def detectors(self, circuit: Circuit) -> list[int]:
        return [int(np.bitwise_xor.reduce([self.record[r] for r in d])) if d else 0 for d in circuit.detectors]


def sv_run_trajectory(circuit: Circuit, p: float | None, seed, state: StateVector | None = None,
                      rng: np.random.Generator | None = None, faults: dict | None = None) -> Trajectory:
    """Run one trajectory.  ``p`` overrides every channel strength (None keeps them).

    Pass ``state`` to continue from an earlier trajectory (it is modified in place).
    ``faults`` maps (instruction index, group index) to a term code and replaces
    random noise entirely.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    if state is None:
        state = StateVector(circuit.n_qubits)
    elif state.n != circuit.n_qubits:
        raise CircuitError("state and circuit sizes differ")
    record: list[int] = []
    for idx, ins in enumerate(circuit.instructions):
        name = ins.name
        if name in NOISE and faults is not None:
            for g, grp in enumerate(ins.groups()):
                term = faults.get((idx, g))
                if term:
                    state.apply_pauli(_pauli_from_term(state.n, grp, term))
        elif name in NOISE:
            prob = ins.arg if p is None else p
            if prob <= 0:
                continue
            for grp in ins.groups():
                if rng.random() < prob:
                    state.apply_pauli(_pauli_from_term(state.n, grp, _noise_term(len(grp), rng)))
        elif name in RESETS:
            for q in ins.targets:
                state.reset(q, rng)
                if name == "RX":
                    state.apply_matrix(_H, [q])
        elif name in MEASUREMENTS:
            inv = ins.inverted or (False,) * len(ins.targets)
            for q, flip in zip(ins.targets, inv):
                if name == "MX":
                    state.apply_matrix(_H, [q])
                    bit = state.measure_z(q, rng)
                    state.apply_matrix(_H, [q])
                else:
                    bit = state.measure_z(q, rng)
                record.append(bit ^ int(flip))
        elif name == "MPP":
            inv = ins.inverted or (False,) * len(ins.targets)
            for prod, flip in zip(ins.targets, inv):
                pauli = PauliOperator.from_sparse(state.n, prod)
                record.append(state.measure_pauli(pauli, rng) ^ int(flip))
        elif ins.is_unitary:
            for grp in ins.groups():
                state.apply(name, grp)
    return Trajectory(record, state)


def codespace_basis(code: StabilizerCode) -> np.ndarray:
    """Orthonormal columns spanning the code space, logical |j> in column j (bit i = logical i)."""
    from .encoder import perfect_encoder

    cols = []
    for j in range(1 << code.k):
        labels = ["1" if (j >> i) & 1 else "0" for i in range(code.k)]
        t = sv_run_trajectory(perfect_encoder(code, labels), None, 0)
        cols.append(t.state.vector())
    basis = np.array(cols).T
    # fix relative phases so that logical X maps basis vectors onto each other with +1
    for j in range(1, 1 << code.k):
        lead = j & -j
        i = lead.bit_length() - 1
        src = StateVector(code.n, basis[:, j ^ lead].copy())
        src.apply_pauli(code.logical(i, "X"))
        basis[:, j] = src.vector()
    return basis


def logical_unitary(code: StabilizerCode, circuit: Circuit) -> np.ndarray:
    """Matrix of a noise-free unitary circuit restricted to the code space (data qubits only)."""
    basis = codespace_basis(code)
    n = circuit.n_qubits
    if n != code.n:
        raise CircuitError("logical_unitary expects a circuit on the data qubits only")
    out = np.zeros((basis.shape[1], basis.shape[1]), dtype=complex)
    for j in range(basis.shape[1]):
        s = StateVector(n, basis[:, j].copy())
        for ins in circuit.instructions:
            if not ins.is_unitary:
                raise CircuitError("logical_unitary needs a purely unitary circuit")
            for grp in ins.groups():
                s.apply(ins.name, grp)
        out[:, j] = basis.conj().T @ s.vector()
    return out


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    k = np.argmax(np.abs(b))
    if abs(b.flat[k]) < atol:
        return np.allclose(a, b, atol=atol)
    phase = a.flat[k] / b.flat[k]
    return abs(abs(phase) - 1) < 1e-6 and np.allclose(a, phase * b, atol=atol)
