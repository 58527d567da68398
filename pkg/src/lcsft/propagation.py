"""Exact forward propagation of Pauli faults through Clifford circuits (bitmask frames)."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import gates
from .circuit import MEASUREMENTS, NOISE, RESETS, Circuit, CircuitError, FaultSite
from .gf2 import parity
from .pauli import PauliOperator


@dataclass(frozen=True)
class ElementaryFault:
    """A non-identity Pauli emitted by one noise site (``pauli`` is on the site's qubits)."""
    site: FaultSite
    pauli: PauliOperator

    def __str__(self) -> str:
        letters = self.pauli.letters()
        return f"{letters}@{self.site.instruction}:{','.join(map(str, self.site.qubits))}"


@dataclass(frozen=True)
class FaultPath:
    faults: tuple[ElementaryFault, ...] = ()

    @property
    def order(self) -> int:
        return len(self.faults)

    def __post_init__(self) -> None:
        if len(set(self.faults)) != len(self.faults):
            raise ValueError("fault path repeats an elementary fault")

    @property
    def distinct_locations(self) -> bool:
        locs = [(f.site.instruction, f.site.group) for f in self.faults]
        return len(set(locs)) == len(locs)

    def __str__(self) -> str:
        return "{" + ", ".join(map(str, self.faults)) + "}"


@dataclass(frozen=True)
class FaultEffect:
    detectors: int      # bitmask over detector index
    observables: int    # bitmask over observable index
    x: int              # residual on the data qubits, as bitmasks
    z: int

    def __xor__(self, other: FaultEffect) -> FaultEffect:
        return FaultEffect(self.detectors ^ other.detectors, self.observables ^ other.observables,
                           self.x ^ other.x, self.z ^ other.z)

    @property
    def trivial(self) -> bool:
        return not (self.detectors or self.observables or self.x or self.z)


NO_EFFECT = FaultEffect(0, 0, 0, 0)


def site_terms(site: FaultSite) -> list[PauliOperator]:
    k = site.arity
    out = []
    for letters in product("IXYZ", repeat=k):
        if set(letters) != {"I"}:
            out.append(PauliOperator.from_letters("".join(letters)))
    return out


class FramePropagator:
    """Pre-digested circuit for repeated single-frame propagation."""

    def __init__(self, circuit: Circuit, data_qubits=None) -> None:
        if circuit.has_non_clifford():
            raise CircuitError("fault propagation needs a Clifford circuit")
        self.circuit = circuit
        self.data_qubits = list(range(circuit.n_qubits) if data_qubits is None else data_qubits)
        n_rec = circuit.num_measurements
        rec_det = [0] * n_rec
        rec_obs = [0] * n_rec
        for d, recs in enumerate(circuit.detectors):
            for r in recs:
                rec_det[r] ^= 1 << d
        for o, recs in enumerate(circuit.observables):
            for r in recs:
                rec_obs[r] ^= 1 << o
        self.rec_det, self.rec_obs = rec_det, rec_obs
        # compiled steps: (kind, payload, first record index)
        steps = []
        rec = 0
        for ins in circuit.instructions:
            name = ins.name
            if name in RESETS:
                mask = 0
                for q in ins.targets:
                    mask |= 1 << q
                steps.append(("reset", ~mask, rec))
            elif name in MEASUREMENTS:
                steps.append(("mz" if name == "MZ" else "mx", list(ins.targets), rec))
            elif name == "MPP":
                prods = []
                for prod in ins.targets:
                    p = PauliOperator.from_sparse(circuit.n_qubits, prod)
                    prods.append((p.x, p.z))
                steps.append(("mpp", prods, rec))
            elif ins.is_unitary:
                table = gates.conjugation_table(name)
                local = {k: (v.x, v.z) for k, v in table.items()}
                steps.append(("gate", (local, ins.groups()), rec))
            else:
                steps.append(("skip", None, rec))
            rec += ins.n_measurements
        self.steps = steps
        self._data_mask = sum(1 << q for q in self.data_qubits)

    def run(self, x: int, z: int, start: int, inject: dict[int, list[tuple[int, int]]] | None = None
            ) -> FaultEffect:
        """Propagate the frame (x, z) from just after instruction ``start - 1``.

        ``inject`` maps an instruction index to frames XOR-ed in right after it.
        """
        det = obs = 0
        rec_det, rec_obs = self.rec_det, self.rec_obs
        for idx in range(start, len(self.steps)):
            kind, payload, rec = self.steps[idx]
            if kind == "gate":
                if x or z:
                    local, groups = payload
                    for grp in groups:
                        lx = lz = 0
                        for j, q in enumerate(grp):
                            lx |= ((x >> q) & 1) << j
                            lz |= ((z >> q) & 1) << j
                        if lx or lz:
                            nx, nz = local[(lx, lz)]
                            for j, q in enumerate(grp):
                                bit = 1 << q
                                x = (x | bit) if (nx >> j) & 1 else (x & ~bit)
                                z = (z | bit) if (nz >> j) & 1 else (z & ~bit)
            elif kind == "reset":
                x &= payload
                z &= payload
            elif kind == "mz":
                for j, q in enumerate(payload):
                    if (x >> q) & 1:
                        det ^= rec_det[rec + j]
                        obs ^= rec_obs[rec + j]
            elif kind == "mx":
                for j, q in enumerate(payload):
                    if (z >> q) & 1:
                        det ^= rec_det[rec + j]
                        obs ^= rec_obs[rec + j]
            elif kind == "mpp":
                for j, (px, pz) in enumerate(payload):
                    if parity((x & pz) ^ (z & px)):
                        det ^= rec_det[rec + j]
                        obs ^= rec_obs[rec + j]
            if inject and idx in inject:
                for fx, fz in inject[idx]:
                    x ^= fx
                    z ^= fz
        rx = rz = 0
        for j, q in enumerate(self.data_qubits):
            rx |= ((x >> q) & 1) << j
            rz |= ((z >> q) & 1) << j
        return FaultEffect(det, obs, rx, rz)

    @staticmethod
    def _frame(site: FaultSite, pauli: PauliOperator) -> tuple[int, int]:
        x = z = 0
        for j, q in enumerate(site.qubits):
            x |= ((pauli.x >> j) & 1) << q
            z |= ((pauli.z >> j) & 1) << q
        return x, z

    def effect(self, fault: ElementaryFault) -> FaultEffect:
        x, z = self._frame(fault.site, fault.pauli)
        return self.run(x, z, fault.site.instruction + 1)

    def site_effects(self, site: FaultSite) -> list[tuple[PauliOperator, FaultEffect]]:
        """Effects of all 4^k - 1 terms at ``site``, by linearity over basis Paulis."""
        basis = {}
        for j, q in enumerate(site.qubits):
            basis[("X", j)] = self.run(1 << q, 0, site.instruction + 1)
            basis[("Z", j)] = self.run(0, 1 << q, site.instruction + 1)
        out = []
        for term in site_terms(site):
            eff = NO_EFFECT
            for j in range(site.arity):
                if (term.x >> j) & 1:
                    eff = eff ^ basis[("X", j)]
                if (term.z >> j) & 1:
                    eff = eff ^ basis[("Z", j)]
            out.append((term, eff))
        return out

    def path_effect(self, path: FaultPath) -> FaultEffect:
        if not path.faults:
            return NO_EFFECT
        inject: dict[int, list[tuple[int, int]]] = {}
        for f in path.faults:
            inject.setdefault(f.site.instruction, []).append(self._frame(f.site, f.pauli))
        start = min(inject)
        x = z = 0
        for fx, fz in inject.pop(start):
            x ^= fx
            z ^= fz
        return self.run(x, z, start + 1, inject)


def bits(mask: int, length: int) -> np.ndarray:
    return np.array([(mask >> i) & 1 for i in range(length)], dtype=np.uint8)


def propagate_fault(circuit: Circuit, fault: FaultPath, data_qubits=None
                    ) -> tuple[np.ndarray, np.ndarray, PauliOperator]:
    """Detector flips, observable flips and the data residual caused by ``fault``."""
    prop = FramePropagator(circuit, data_qubits)
    for f in fault.faults:
        ins = circuit.instructions[f.site.instruction]
        if ins.name not in NOISE or f.site.qubits not in ins.groups():
            raise CircuitError(f"{f} is not a noise site of the circuit")
        if f.pauli.n != f.site.arity or f.pauli.is_identity:
            raise CircuitError(f"{f} carries an invalid Pauli term")
    eff = prop.path_effect(fault)
    residual = PauliOperator(len(prop.data_qubits), eff.x, eff.z)
    return bits(eff.detectors, circuit.num_detectors), bits(eff.observables, len(circuit.observables)), residual
