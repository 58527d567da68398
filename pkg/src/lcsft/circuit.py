"""Circuit IR: instructions, measurement record, detectors/observables, and a text format.

Text format, one instruction per line::

    RX 16
    YCY 0 10
    DEPOLARIZE2(0.001) 0 10
    MX !16
    MPP X0*X10*X12 !Y0*Y1
    DETECTOR rec[-1] rec[-5]
    OBSERVABLE(0) rec[-3]

``!`` inverts a recorded measurement bit.  Record references are relative to the
end of the record at the point where the annotation appears, so circuits can be
concatenated without rewriting them.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from . import gates
from .pauli import PauliOperator

RESETS = {"RZ", "RX", "R"}
MEASUREMENTS = {"MZ", "MX"}
NOISE = {"DEPOLARIZE1": 1, "DEPOLARIZE2": 2, "DEPOLARIZE3": 3}
ANNOTATIONS = {"DETECTOR", "OBSERVABLE", "TICK"}


class CircuitError(ValueError):
    pass


def gate_arity(name: str) -> int:
    if name in RESETS or name in MEASUREMENTS:
        return 1
    if name in NOISE:
        return NOISE[name]
    if name in gates.UNITARIES:
        return gates.arity(name)
    raise CircuitError(f"unknown instruction {name!r}")


@dataclass(frozen=True)
class Instruction:
    name: str
    targets: tuple = ()
    arg: float | int | None = None
    inverted: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        name = self.name
        if name in ANNOTATIONS:
            if name == "OBSERVABLE" and not isinstance(self.arg, int):
                raise CircuitError("OBSERVABLE needs an integer index")
            if name != "TICK" and any(not isinstance(t, int) or t >= 0 for t in self.targets):
                raise CircuitError(f"{name} targets must be negative record offsets")
            return
        if name == "MPP":
            if len(self.inverted) != len(self.targets):
                object.__setattr__(self, "inverted", (False,) * len(self.targets))
            for prod in self.targets:
                qs = [q for q, _ in prod]
                if not prod or len(set(qs)) != len(qs):
                    raise CircuitError(f"bad MPP product {prod}")
            return
        k = gate_arity(name)
        if len(self.targets) == 0 or len(self.targets) % k:
            raise CircuitError(f"{name} expects a multiple of {k} targets, got {self.targets}")
        for i in range(0, len(self.targets), k):
            grp = self.targets[i:i + k]
            if len(set(grp)) != k:
                raise CircuitError(f"{name} targets must be distinct: {grp}")
        if name in NOISE and not (self.arg is not None and 0 <= self.arg <= 1):
            raise CircuitError(f"{name} needs a probability argument")
        if name in MEASUREMENTS and len(self.inverted) != len(self.targets):
            object.__setattr__(self, "inverted", (False,) * len(self.targets))

    @property
    def arity(self) -> int:
        return gate_arity(self.name)

    @property
    def n_measurements(self) -> int:
        return len(self.targets) if self.name in MEASUREMENTS or self.name == "MPP" else 0

    @property
    def is_unitary(self) -> bool:
        return self.name in gates.UNITARIES

    def groups(self) -> list[tuple[int, ...]]:
        k = self.arity
        return [tuple(self.targets[i:i + k]) for i in range(0, len(self.targets), k)]

    def qubits(self) -> set[int]:
        if self.name in ANNOTATIONS:
            return set()
        if self.name == "MPP":
            return {q for prod in self.targets for q, _ in prod}
        return set(self.targets)

    def to_text(self) -> str:
        head = self.name
        if self.arg is not None:
            head += f"({self.arg!r})"
        if self.name in ("DETECTOR", "OBSERVABLE"):
            body = [f"rec[{t}]" for t in self.targets]
        elif self.name == "MPP":
            body = [("!" if inv else "") + "*".join(f"{c}{q}" for q, c in prod)
                    for prod, inv in zip(self.targets, self.inverted)]
        elif self.name in MEASUREMENTS:
            body = [("!" if inv else "") + str(t) for t, inv in zip(self.targets, self.inverted)]
        else:
            body = [str(t) for t in self.targets]
        return " ".join([head] + body)


_LINE_RE = re.compile(r"^([A-Z_0-9]+)(?:\(([^)]*)\))?\s*(.*)$")
_REC_RE = re.compile(r"^rec\[(-\d+)\]$")
_MPP_TERM = re.compile(r"^([XYZ])(\d+)$")


def parse_instruction(line: str) -> Instruction:
    m = _LINE_RE.match(line.strip())
    if m is None:
        raise CircuitError(f"cannot parse line {line!r}")
    name, arg_text, rest = m.group(1), m.group(2), m.group(3).split()
    arg = None
    if arg_text is not None:
        arg = int(arg_text) if name == "OBSERVABLE" else float(arg_text)
    if name in ("DETECTOR", "OBSERVABLE"):
        recs = []
        for tok in rest:
            rm = _REC_RE.match(tok)
            if rm is None:
                raise CircuitError(f"bad record reference {tok!r}")
            recs.append(int(rm.group(1)))
        return Instruction(name, tuple(recs), arg)
    if name == "MPP":
        prods, inv = [], []
        for tok in rest:
            inv.append(tok.startswith("!"))
            terms = []
            for part in tok.lstrip("!").split("*"):
                tm = _MPP_TERM.match(part)
                if tm is None:
                    raise CircuitError(f"bad MPP term {part!r}")
                terms.append((int(tm.group(2)), tm.group(1)))
            prods.append(tuple(terms))
        return Instruction(name, tuple(prods), arg, tuple(inv))
    if name in MEASUREMENTS:
        inv = tuple(tok.startswith("!") for tok in rest)
        return Instruction(name, tuple(int(tok.lstrip("!")) for tok in rest), arg, inv)
    try:
        targets = tuple(int(tok) for tok in rest)
    except ValueError as exc:
        raise CircuitError(f"bad targets in {line!r}") from exc
    return Instruction(name, targets, arg)


@dataclass(frozen=True)
class FaultSite:
    """One noisy location: a depolarizing channel acting on ``qubits``."""
    instruction: int
    group: int
    qubits: tuple[int, ...]
    p: float

    @property
    def arity(self) -> int:
        return len(self.qubits)


@dataclass
class Circuit:
    n_qubits: int
    instructions: list[Instruction] = field(default_factory=list)

    # construction -------------------------------------------------------------
    def append(self, name: str, targets: Iterable = (), arg=None, inverted: Iterable[bool] = ()) -> Circuit:
        ins = Instruction(name, tuple(targets), arg, tuple(inverted))
        for q in ins.qubits():
            if not 0 <= q < self.n_qubits:
                raise CircuitError(f"qubit {q} out of range (n={self.n_qubits})")
        if name in ("DETECTOR", "OBSERVABLE"):
            have = self.num_measurements
            if any(-t > have for t in ins.targets):
                raise CircuitError(f"record reference out of range in {ins.to_text()}")
        self.instructions.append(ins)
        return self

    def measure_pauli(self, products: list[PauliOperator], inverted: Iterable[bool] | None = None) -> Circuit:
        prods = [tuple((q, p.letter(q)) for q in p.support) for p in products]
        inv = list(inverted) if inverted is not None else [p.phase == 2 for p in products]
        return self.append("MPP", prods, None, inv)

    def detector(self, *absolute: int) -> Circuit:
        have = self.num_measurements
        return self.append("DETECTOR", [a - have for a in absolute])

    def observable(self, index: int, absolute: Iterable[int]) -> Circuit:
        have = self.num_measurements
        return self.append("OBSERVABLE", [a - have for a in absolute], index)

    def copy(self) -> Circuit:
        return Circuit(self.n_qubits, list(self.instructions))

    def __add__(self, other: Circuit) -> Circuit:
        return Circuit(max(self.n_qubits, other.n_qubits), self.instructions + other.instructions)

    def without_annotations(self, names: Iterable[str] = ("DETECTOR", "OBSERVABLE")) -> Circuit:
        drop = set(names)
        return Circuit(self.n_qubits, [i for i in self.instructions if i.name not in drop])

    # queries ------------------------------------------------------------------
    @property
    def num_measurements(self) -> int:
        return sum(i.n_measurements for i in self.instructions)

    def _annotation_sets(self, name: str) -> list[tuple[int | None, tuple[int, ...]]]:
        out = []
        count = 0
        for ins in self.instructions:
            count += ins.n_measurements
            if ins.name == name:
                out.append((ins.arg, tuple(sorted(count + t for t in ins.targets))))
        return out

    @property
    def detectors(self) -> list[tuple[int, ...]]:
        return [recs for _, recs in self._annotation_sets("DETECTOR")]

    @property
    def observables(self) -> list[tuple[int, ...]]:
        """Observable record sets by index; repeated OBSERVABLE(k) lines accumulate (XOR)."""
        acc: dict[int, set[int]] = {}
        for idx, recs in self._annotation_sets("OBSERVABLE"):
            s = acc.setdefault(idx, set())
            for r in recs:
                s ^= {r}
        if not acc:
            return []
        return [tuple(sorted(acc.get(k, ()))) for k in range(max(acc) + 1)]

    @property
    def num_detectors(self) -> int:
        return sum(1 for i in self.instructions if i.name == "DETECTOR")

    def fault_sites(self) -> list[FaultSite]:
        out = []
        for idx, ins in enumerate(self.instructions):
            if ins.name in NOISE and ins.arg > 0:
                for g, grp in enumerate(ins.groups()):
                    out.append(FaultSite(idx, g, grp, float(ins.arg)))
        return out

    def count_entangling(self) -> int:
        n = 0
        for ins in self.instructions:
            if ins.is_unitary and ins.arity >= 2:
                n += len(ins.groups())
        return n

    def has_non_clifford(self) -> bool:
        return any(ins.is_unitary and not gates.is_clifford(ins.name) for ins in self.instructions)

    def iter_measurements(self) -> Iterator[tuple[int, int]]:
        """(instruction index, position within instruction) for each record entry."""
        for idx, ins in enumerate(self.instructions):
            for j in range(ins.n_measurements):
                yield idx, j

    # text ---------------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"QUBITS {self.n_qubits}"] + [ins.to_text() for ins in self.instructions]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Circuit:
        n = None
        instrs = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("QUBITS"):
                n = int(line.split()[1])
                continue
            instrs.append(parse_instruction(line))
        if n is None:
            n = 1 + max((q for ins in instrs for q in ins.qubits()), default=-1)
        c = cls(n)
        for ins in instrs:
            c.append(ins.name, ins.targets, ins.arg, ins.inverted)
        return c

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def __str__(self) -> str:
        return self.to_text()


def with_noise(circuit: Circuit, p: float, skip_qubits: Iterable[int] = ()) -> Circuit:
    """Insert depolarizing channels: after gates and resets, before MZ/MX.

    Multi-qubit unitaries get a channel of matching arity on their targets.  MPP,
    annotations and idle qubits stay noiseless.  ``skip_qubits`` are treated as
    perfect (no channel touches them).
    """
    skip = set(skip_qubits)
    out = Circuit(circuit.n_qubits)

    def noisy(groups: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
        return [g for g in groups if not (set(g) & skip)]

    for ins in circuit.instructions:
        if ins.name in MEASUREMENTS:
            grp = noisy(ins.groups())
            if grp and p > 0:
                out.append("DEPOLARIZE1", [q for g in grp for q in g], p)
            out.instructions.append(ins)
            continue
        out.instructions.append(ins)
        if p > 0 and (ins.name in RESETS or ins.is_unitary):
            grp = noisy(ins.groups())
            if grp:
                out.append(f"DEPOLARIZE{ins.arity}", [q for g in grp for q in g], p)
    return out


def with_strength(circuit: Circuit, p: float) -> Circuit:
    """Copy with every depolarizing channel set to strength ``p``."""
    return Circuit(circuit.n_qubits, [Instruction(i.name, i.targets, p, i.inverted) if i.name in NOISE else i
                                      for i in circuit.instructions])


def depolarize_layer(n_qubits: int, qubits: Iterable[int], p: float) -> Circuit:
    c = Circuit(n_qubits)
    qs = list(qubits)
    if qs and p > 0:
        c.append("DEPOLARIZE1", qs, p)
    return c
