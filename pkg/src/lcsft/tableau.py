"""Noise-free stabilizer simulation with symbolic measurement outcomes.

The state is a list of stabilizer generators.  Each generator carries a sign
that is an affine function over GF(2) of "coin" variables, one coin per random
measurement.  A measurement outcome is therefore ``const ^ parity(mask & coins)``
and a detector is deterministic exactly when the masks of its records cancel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import gates
from .circuit import Circuit, CircuitError
from .gf2 import XorBasis
from .pauli import PauliOperator, multiply


@dataclass(frozen=True)
class Outcome:
    const: int
    mask: int  # coin variables the outcome depends on

    @property
    def deterministic(self) -> bool:
        return self.mask == 0

    def __xor__(self, other: Outcome) -> Outcome:
        return Outcome(self.const ^ other.const, self.mask ^ other.mask)


ZERO = Outcome(0, 0)


def _sym(p: PauliOperator) -> int:
    return p.x | (p.z << p.n)


@dataclass
class SymbolicTableau:
    n: int
    gens: list[PauliOperator] = field(default_factory=list)   # phase 0 or 2
    masks: list[int] = field(default_factory=list)
    n_coins: int = 0

    def __post_init__(self) -> None:
        if not self.gens:
            self.gens = [PauliOperator.single(self.n, q, "Z") for q in range(self.n)]
            self.masks = [0] * self.n

    # primitive operations -------------------------------------------------
    def apply(self, kind: str, targets: tuple[int, ...]) -> None:
        if not gates.is_clifford(kind):
            raise CircuitError(f"stabilizer simulation cannot apply non-Clifford gate {kind}")
        self.gens = [gates.conjugate(kind, targets, g) for g in self.gens]

    def _mul_into(self, j: int, i: int) -> None:
        self.gens[j] = multiply(self.gens[j], self.gens[i])
        self.masks[j] ^= self.masks[i]

    def peek(self, p: PauliOperator) -> Outcome | None:
        """Outcome of measuring ``p`` if it is determined, else None (state untouched)."""
        if any(p.commutes(g) for g in self.gens):
            return None
        basis = XorBasis()
        for g in self.gens:
            basis.add(_sym(g))
        combo = basis.decompose(_sym(p))
        if combo is None:  # cannot happen for a full-rank stabilizer state
            raise RuntimeError("Pauli commutes with all generators but is outside their span")
        acc = PauliOperator.identity(self.n)
        mask = 0
        for i in range(self.n):
            if (combo >> i) & 1:
                acc = multiply(acc, self.gens[i])
                mask ^= self.masks[i]
        rel = (acc.phase - p.phase) % 4
        if rel not in (0, 2):
            raise CircuitError(f"measured operator {p} is not Hermitian relative to the state")
        return Outcome(rel // 2, mask)

    def measure(self, p: PauliOperator) -> Outcome:
        anti = [i for i, g in enumerate(self.gens) if p.commutes(g)]
        if not anti:
            return self.peek(p)
        i0 = anti[0]
        for j in anti[1:]:
            self._mul_into(j, i0)
        coin = self.n_coins
        self.n_coins += 1
        self.gens[i0] = p
        self.masks[i0] = 1 << coin
        return Outcome(0, 1 << coin)

    def reset(self, q: int) -> None:
        zq = PauliOperator.single(self.n, q, "Z")
        anti = [i for i, g in enumerate(self.gens) if zq.commutes(g)]
        if anti:
            self.measure(zq)
            piv = anti[0]
        else:
            # deterministic: fold the decomposition into one generator that has Z on q
            basis = XorBasis()
            for g in self.gens:
                basis.add(_sym(g))
            combo = basis.decompose(_sym(zq))
            members = [i for i in range(self.n) if (combo >> i) & 1]
            piv = next(i for i in members if (self.gens[i].z >> q) & 1)
            for i in members:
                if i != piv:
                    self._mul_into(piv, i)
        for j in range(self.n):
            if j != piv and (self.gens[j].z >> q) & 1:
                self._mul_into(j, piv)
        self.gens[piv] = zq
        self.masks[piv] = 0


def simulate(circuit: Circuit) -> tuple[SymbolicTableau, list[Outcome]]:
    """Run ``circuit`` noise-free; returns the final state and the symbolic record."""
    t = SymbolicTableau(circuit.n_qubits)
    rec: list[Outcome] = []
    n = circuit.n_qubits
    for ins in circuit.instructions:
        name = ins.name
        if name in ("DETECTOR", "OBSERVABLE", "TICK") or name.startswith("DEPOLARIZE"):
            continue
        if name in ("RZ", "R"):
            for q in ins.targets:
                t.reset(q)
        elif name == "RX":
            for q in ins.targets:
                t.reset(q)
                t.apply("H", (q,))
        elif name in ("MZ", "MX"):
            letter = "Z" if name == "MZ" else "X"
            for q, inv in zip(ins.targets, ins.inverted):
                o = t.measure(PauliOperator.single(n, q, letter))
                rec.append(Outcome(o.const ^ int(inv), o.mask))
        elif name == "MPP":
            for prod, inv in zip(ins.targets, ins.inverted):
                o = t.measure(PauliOperator.from_sparse(n, prod))
                rec.append(Outcome(o.const ^ int(inv), o.mask))
        elif ins.is_unitary:
            for grp in ins.groups():
                t.apply(name, grp)
        else:
            raise CircuitError(f"unsupported instruction {name}")
    return t, rec


@dataclass
class DetectorReport:
    valid: bool
    nondeterministic: list[int]
    nonzero: list[int]
    observables_deterministic: list[bool]

    def __bool__(self) -> bool:
        return self.valid


def _xor_all(rec: list[Outcome], idx: tuple[int, ...]) -> Outcome:
    acc = ZERO
    for r in idx:
        acc = acc ^ rec[r]
    return acc


def validate_detectors(circuit: Circuit) -> DetectorReport:
    if circuit.has_non_clifford():
        raise CircuitError("detector validation needs a Clifford circuit")
    _, rec = simulate(circuit)
    nondet, nonzero = [], []
    for k, dset in enumerate(circuit.detectors):
        v = _xor_all(rec, dset)
        if not v.deterministic:
            nondet.append(k)
        elif v.const:
            nonzero.append(k)
    obs = [_xor_all(rec, oset).deterministic for oset in circuit.observables]
    return DetectorReport(not nondet and not nonzero, nondet, nonzero, obs)


def reference_observables(circuit: Circuit) -> list[int]:
    _, rec = simulate(circuit)
    out = []
    for oset in circuit.observables:
        v = _xor_all(rec, oset)
        if not v.deterministic:
            raise CircuitError("observable is not deterministic")
        out.append(v.const)
    return out


def fix_detector_signs(circuit: Circuit) -> Circuit:
    """Invert one record of every deterministic detector/observable whose noise-free value is 1."""
    _, rec = simulate(circuit)
    flip: set[int] = set()
    for dset in circuit.detectors + circuit.observables:
        v = _xor_all(rec, dset)
        if v.deterministic and v.const and dset:
            r = dset[-1]
            if r in flip:
                raise CircuitError("record shared by two sign-fixed annotations")
            flip.add(r)
    if not flip:
        return circuit
    out = circuit.copy()
    pos = 0
    for k, ins in enumerate(out.instructions):
        m = ins.n_measurements
        hits = [j for j in range(m) if pos + j in flip]
        if hits:
            inv = list(ins.inverted)
            for j in hits:
                inv[j] = not inv[j]
            out.instructions[k] = type(ins)(ins.name, ins.targets, ins.arg, tuple(inv))
        pos += m
    if not validate_detectors(out):
        raise CircuitError("sign fixing left an invalid detector (shared records)")
    return out


def stabilizer_sign(circuit: Circuit, p: PauliOperator) -> int | None:
    """+1/-1 if the noise-free output state is an eigenstate of ``p`` with a fixed sign."""
    t, _ = simulate(circuit)
    o = t.peek(p)
    if o is None or not o.deterministic:
        return None
    return -1 if o.const else 1
