"""Synthesis of round-robin logical gates, flag gadgets, syndrome extraction and magic measurement.

Qubit layout: data qubits ``0..n-1`` come first, auxiliary qubits (flags,
stabilizer ancillas, magic measurement qubit) are appended after them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from . import gates
from .circuit import Circuit
from .code import StabilizerCode
from .pauli import PauliOperator, multiply, product
from .tableau import fix_detector_signs

GATE_KINDS = ("H", "S", "CX", "T")
FLAVORS = ("bare", "flagged", "flagged_with_stabs")


class SynthesisError(ValueError):
    pass


@dataclass(frozen=True)
class GateSpec:
    kind: str
    targets: tuple[int, ...]
    flavor: str = "flagged_with_stabs"

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise SynthesisError(f"unknown gate kind {self.kind}")
        if self.flavor not in FLAVORS:
            raise SynthesisError(f"unknown flavor {self.flavor}")
        want = 2 if self.kind == "CX" else 1
        if len(self.targets) != want:
            raise SynthesisError(f"{self.kind} needs {want} logical target(s)")
        if self.kind == "CX" and self.targets[0] == self.targets[1]:
            raise SynthesisError("logical CX needs distinct control and target")
        if self.kind == "T" and self.flavor != "bare":
            raise SynthesisError("T is only available as a bare circuit")

    @property
    def label(self) -> str:
        return f"{self.kind}{''.join(map(str, self.targets))}"


@dataclass
class SynthesizedGate:
    circuit: Circuit
    spec: GateSpec
    flag_qubits: list[int] = field(default_factory=list)
    inserted_stabilizers: list[PauliOperator] = field(default_factory=list)
    stabilizer_factors: list[list[int]] = field(default_factory=list)   # generator indices per inserted stabilizer

    @property
    def entangling_count(self) -> int:
        return self.circuit.count_entangling()


# inserted stabilizers for the [[15,3,3]] code, as generator index lists
# (0..5 are S_X^(i), 6..11 are S_Z^(i))
def _xz(i: int) -> list[int]:
    return [i, 6 + i]


# cyclic shift of the ascending CP order for some inserted measurements, keyed by
# (kind, logical, stabilizer slot); the ascending order leaves hook errors of these
# measurements indistinguishable from later data faults
CP_ROTATION = {("H", 1, 0): 2}

LCS_INSERTED = {
    ("S", 0): [[6], [9]], ("S", 1): [[7], [10]], ("S", 2): [[8], [11]],
    ("H", 0): [_xz(0) + _xz(1) + _xz(2), _xz(3)],
    ("H", 1): [_xz(1), _xz(4)],
    ("H", 2): [_xz(0) + _xz(1) + _xz(2), _xz(5)],
    ("CX", (0, 1)): [[6], [9], [1], [5]],
    ("CX", (1, 0)): [[7], [11], [0], [3]],
    ("CX", (0, 2)): [[6], [9], [2], [5]],
    ("CX", (2, 0)): [[8], [9], [0], [4]],
    ("CX", (1, 2)): [[7], [11], [2], [3]],
    ("CX", (2, 1)): [[8], [11], [1], [4]],
}


def support_of(code: StabilizerCode, i: int) -> list[int]:
    lx, lz = code.logical_x[i], code.logical_z[i]
    if lx.support != lz.support or set(lx.letters()) - {"I", "X"} or set(lz.letters()) - {"I", "Z"}:
        raise SynthesisError(f"logical {i} is not a pair of X/Z strings on one support")
    if len(lx.support) % 2 == 0:
        raise SynthesisError(f"logical {i} has even weight")
    return lx.support


def round_robin_pairs(support: list[int]) -> list[tuple[int, int]]:
    return list(combinations(sorted(support), 2))


def cx_layers(controls: list[int], targets: list[int]) -> list[list[tuple[int, int]]]:
    """All-to-all CX arranged in d parallel layers: layer s pairs controls[a] with targets[s-a-1].

    The pairing decides which control/target pairs form the last, unflagged
    layer.  A control or target fault just before it becomes a weight-2 error,
    and for other pairings some of these share a syndrome with a weight-1 error
    times a logical (memory distance 2) or with another trivial-signature
    residual (gadget lookup collision).
    """
    d = len(controls)
    if len(targets) != d:
        raise SynthesisError("control and target supports differ in size")
    return [[(controls[a], targets[(s - a - 1) % d]) for a in range(d)] for s in range(d)]


# bare circuits ------------------------------------------------------------------------

def synth_general_d(support, kind: str, n_qubits: int | None = None, target_support=None) -> Circuit:
    """Bare (non fault-tolerant) logical gate on a logical with the given support."""
    sup = sorted(support)
    n = n_qubits if n_qubits is not None else 1 + max(sup + list(target_support or []))
    c = Circuit(n)
    if kind == "CX":
        tgt = sorted(target_support or [])
        if set(sup) & set(tgt):
            raise SynthesisError("CX supports must be disjoint")
        if len(sup) != len(tgt):
            raise SynthesisError("control and target supports differ in size")
        for a in sup:
            for b in tgt:
                c.append("CX", (a, b))
        return c
    d = len(sup)
    if d % 2 == 0:
        raise SynthesisError("single-qubit logical gates need an odd-weight support")
    if kind in ("H", "S"):
        for a, b in round_robin_pairs(sup):
            c.append(_PCP[kind], (a, b))
        _transversal(c, sup, kind)
    elif kind == "T":
        # phase omega^(parity of the support): fold the parity of all but the first
        # qubit into the last one, apply omega^(a xor b) = T_a T_b CS^dagger_ab, unfold
        first, last, middle = sup[0], sup[-1], sup[1:-1]
        for q in middle:
            c.append("CX", (q, last))
        c.append("T", (first,))
        c.append("T", (last,))
        c.append("CS_DAG", (first, last))
        for q in reversed(middle):
            c.append("CX", (q, last))
    else:
        raise SynthesisError(f"unknown kind {kind}")
    return c


def _transversal(c: Circuit, sup: list[int], kind: str) -> None:
    for q in sup:
        c.append(kind, (q,))
    if kind == "H" and ((len(sup) - 1) // 2) % 2 == 1:
        for q in sup:
            c.append("Y", (q,))


# syndrome extraction -------------------------------------------------------------------

_CP = {"X": "CX", "Y": "CY", "Z": "CZ"}


def _rotated(seq: list[int], r: int) -> list[int]:
    return seq[r:] + seq[:r]


def measure_pauli_with_ancilla(c: Circuit, p: PauliOperator, anc: int, flag: int | None = None,
                               order: list[int] | None = None) -> tuple[int, int | None]:
    """Append a single-ancilla measurement of ``p``; returns record indices (ancilla, flag).

    The CP gates run over ``order`` (default: ascending qubit index).  A -1 sign
    of ``p`` is not applied here; callers fix detector signs afterwards.
    """
    qs = p.support if order is None else list(order)
    if sorted(qs) != p.support:
        raise SynthesisError("CP order must visit the support of the measured Pauli once")
    c.append("RX", (anc,))
    if flag is not None:
        c.append("RZ", (flag,))
    for j, q in enumerate(qs):
        if flag is not None and j == len(qs) - 1 and len(qs) > 2:
            c.append("CX", (anc, flag))
        c.append(_CP[p.letter(q)], (anc, q))
        if flag is not None and j == 0 and len(qs) > 2:
            c.append("CX", (anc, flag))
    c.append("MX", (anc,))
    a_rec = c.num_measurements - 1
    f_rec = None
    if flag is not None:
        c.append("MZ", (flag,))
        f_rec = c.num_measurements - 1
    return a_rec, f_rec


def synth_syndrome_extraction(code: StabilizerCode, flagged: bool, n_qubits: int | None = None,
                              first_ancilla: int | None = None, generators=None,
                              reuse_ancilla: bool = False) -> Circuit:
    """One round measuring ``generators`` (default: all), one ancilla each, CP gates in qubit order.

    With ``flagged`` every extraction of weight > 2 gets one flag qubit spanning
    the inner gates.  Every ancilla and flag measurement is a detector.
    ``reuse_ancilla`` measures all generators with the same ancilla (and flag).
    """
    idx = list(range(code.n_generators)) if generators is None else list(generators)
    base = code.n if first_ancilla is None else first_ancilla
    per = 2 if flagged else 1
    width = per if reuse_ancilla else per * len(idx)
    n = n_qubits if n_qubits is not None else base + width
    c = Circuit(n)
    for k, gi in enumerate(idx):
        off = 0 if reuse_ancilla else per * k
        anc = base + off
        flag = base + off + 1 if flagged else None
        a_rec, f_rec = measure_pauli_with_ancilla(c, code.generators[gi], anc, flag)
        c.detector(a_rec)
        if f_rec is not None:
            c.detector(f_rec)
    return fix_signs_encoded(code, c) if c.num_detectors else c


def fix_signs_encoded(code: StabilizerCode, c: Circuit) -> Circuit:
    """Fix detector signs as seen on an encoded input (the prefix has no measurements)."""
    from .encoder import perfect_encoder

    prefix = perfect_encoder(code, ["0"] * code.k, c.n_qubits)
    fixed = fix_detector_signs(prefix + c)
    out = c.copy()
    out.instructions = fixed.instructions[len(prefix.instructions):]
    return out


# flagged logical gates -------------------------------------------------------------------

_FLAG_LETTERS = {"H": ("Y", "Z"), "S": ("Z", "X")}
_PCP = {"H": "YCY", "S": "ZCZ"}


def _flag_gate(letter: str) -> str:
    return f"XC{letter}"


def _stab_product(code: StabilizerCode, factors: list[int]) -> PauliOperator:
    return product([code.generators[i] for i in factors])


def inserted_stabilizers(code: StabilizerCode, spec: GateSpec) -> list[list[int]]:
    key = (spec.kind, spec.targets if spec.kind == "CX" else spec.targets[0])
    if code.n != 15 or code.name != "LCS[[15,3,3]]" or key not in LCS_INSERTED:
        raise SynthesisError("no stabilizer-insertion table for this code/gate")
    return LCS_INSERTED[key]


def _single_qubit_flagged(code: StabilizerCode, spec: GateSpec, with_stabs: bool) -> SynthesizedGate:
    kind = spec.kind
    sup = support_of(code, spec.targets[0])
    pairs = round_robin_pairs(sup)
    n = code.n
    flags = list(range(n, n + 2 * len(pairs)))
    factors = inserted_stabilizers(code, spec) if with_stabs else []
    stab_anc = list(range(n + len(flags), n + len(flags) + len(factors)))
    c = Circuit(n + len(flags) + len(stab_anc))
    letter_a, letter_b = _FLAG_LETTERS[kind]
    pcp = _PCP[kind]
    # stabilizer k goes after the first gate of flag A on pair 0 and on the last pair
    designated = {0: 0, len(pairs) - 1: 1} if with_stabs else {}
    stabs = [_stab_product(code, f) for f in factors]
    for k, (u, v) in enumerate(pairs):
        fa, fb = flags[2 * k], flags[2 * k + 1]
        c.append("RZ", (fa,))
        c.append("RZ", (fb,))
        c.append(_flag_gate(letter_a), (fa, u))
        if k in designated:
            s = designated[k]
            order = _rotated(stabs[s].support, CP_ROTATION.get((kind, spec.targets[0], s), 0))
            rec, _ = measure_pauli_with_ancilla(c, stabs[s], stab_anc[s], order=order)
            c.detector(rec)
        c.append(_flag_gate(letter_b), (fb, v))
        c.append(pcp, (u, v))
        # flag B closes with the image of its Pauli through the PCP, the part on u first
        img = gates.conjugate(pcp, (u, v), PauliOperator.single(c.n_qubits, v, letter_b))
        if img.letter(v) != letter_b:
            raise SynthesisError("unexpected flag image")
        extra = img.letter(u)
        if extra != "I":
            c.append(_flag_gate(extra), (fb, u))
        c.append(_flag_gate(letter_b), (fb, v))
        c.append(_flag_gate(letter_a), (fa, u))
        c.append("MZ", (fa,))
        c.detector(c.num_measurements - 1)
        c.append("MZ", (fb,))
        c.detector(c.num_measurements - 1)
    _transversal(c, sup, kind)
    c = fix_signs_encoded(code, c)
    return SynthesizedGate(c, spec, flags, stabs, factors)


def _cx_flagged(code: StabilizerCode, spec: GateSpec, with_stabs: bool) -> SynthesizedGate:
    ctrl = support_of(code, spec.targets[0])
    tgt = support_of(code, spec.targets[1])
    n = code.n
    qubits = ctrl + tgt
    flags = {q: n + j for j, q in enumerate(qubits)}
    factors = inserted_stabilizers(code, spec) if with_stabs else []
    stab_anc = list(range(n + len(flags), n + len(flags) + len(factors)))
    stabs = [_stab_product(code, f) for f in factors]
    c = Circuit(n + len(flags) + len(stab_anc))
    # all control flags open before the Z stabilizers, all target flags before the X ones
    c.append("RZ", [flags[q] for q in qubits])
    for group, letter, stab_ids in ((ctrl, "Z", (0, 1)), (tgt, "X", (2, 3))):
        for q in group:
            c.append(_flag_gate(letter), (flags[q], q))
        for s in stab_ids if with_stabs else ():
            rec, _ = measure_pauli_with_ancilla(c, stabs[s], stab_anc[s])
            c.detector(rec)
    layers = cx_layers(ctrl, tgt)
    for layer in layers[:2]:
        for a, b in layer:
            c.append("CX", (a, b))
    for q in qubits:
        letter = "Z" if q in ctrl else "X"
        c.append(_flag_gate(letter), (flags[q], q))
    for q in qubits:
        c.append("MZ", (flags[q],))
        c.detector(c.num_measurements - 1)
    for layer in layers[2:]:
        for a, b in layer:
            c.append("CX", (a, b))
    c = fix_signs_encoded(code, c)
    return SynthesizedGate(c, spec, [flags[q] for q in qubits], stabs, factors)


def synth_logical(code: StabilizerCode, spec: GateSpec) -> SynthesizedGate:
    if spec.kind == "CX":
        if any(t >= code.k for t in spec.targets):
            raise SynthesisError("logical index out of range")
        if spec.flavor == "bare":
            c = synth_general_d(support_of(code, spec.targets[0]), "CX", code.n,
                                support_of(code, spec.targets[1]))
            return SynthesizedGate(c, spec)
        return _cx_flagged(code, spec, spec.flavor == "flagged_with_stabs")
    if spec.targets[0] >= code.k:
        raise SynthesisError("logical index out of range")
    if spec.flavor == "bare":
        return SynthesizedGate(synth_general_d(support_of(code, spec.targets[0]), spec.kind, code.n), spec)
    return _single_qubit_flagged(code, spec, spec.flavor == "flagged_with_stabs")


def remaining_generators(code: StabilizerCode, gate: SynthesizedGate) -> list[int]:
    """Generators still to measure after ``gate`` so that a full generating set is covered.

    For every inserted stabilizer one factor (the highest generator index not yet
    dropped) is omitted from the round.
    """
    dropped: set[int] = set()
    for factors in gate.stabilizer_factors:
        choice = max(f for f in factors if f not in dropped)
        dropped.add(choice)
    return [i for i in range(code.n_generators) if i not in dropped]


# logical action --------------------------------------------------------------------------

def ideal_logical_images(code: StabilizerCode, spec: GateSpec) -> dict[PauliOperator, PauliOperator]:
    """Textbook images of each X_i, Z_i under the logical gate (as code-level operators)."""
    out = {}
    k = code.k
    for i in range(k):
        for basis in "XZ":
            src = code.logical(i, basis)
            out[src] = src
    if spec.kind in ("H", "S"):
        i = spec.targets[0]
        X, Z, Y = code.logical(i, "X"), code.logical(i, "Z"), code.logical_y(i)
        if spec.kind == "H":
            out[X], out[Z] = Z, X
        else:
            out[X] = Y
    elif spec.kind == "CX":
        ci, ti = spec.targets
        out[code.logical(ci, "X")] = multiply(code.logical(ci, "X"), code.logical(ti, "X"))
        out[code.logical(ti, "Z")] = multiply(code.logical(ci, "Z"), code.logical(ti, "Z"))
    return out


def conjugate_circuit(circuit: Circuit, p: PauliOperator) -> PauliOperator:
    """Heisenberg image ``U p U^dagger`` through the unitary gates of ``circuit``."""
    q = p if p.n == circuit.n_qubits else p.embed(circuit.n_qubits)
    for ins in circuit.instructions:
        if ins.is_unitary:
            for grp in ins.groups():
                q = gates.conjugate(ins.name, grp, q)
    return q


# magic-state measurement ------------------------------------------------------------------

def synth_magic_measure(code: StabilizerCode, logical_index: int, flagged: bool) -> Circuit:
    """Controlled logical-Hadamard measurement on a weight-3 support, measured qubit in X.

    Qubits: data ``0..n-1``, measurement qubit ``n``, flag ``n+1`` (if flagged).
    """
    sup = support_of(code, logical_index)
    if len(sup) != 3:
        raise SynthesisError("magic-state measurement is implemented for weight-3 supports only")
    n = code.n
    m, f = n, n + 1
    c = Circuit(n + 2 if flagged else n + 1)
    c.append("RX", (m,))
    if flagged:
        c.append("RZ", (f,))
    pairs = round_robin_pairs(sup)
    body = [("C_YCY", (m, a, b)) for a, b in pairs]
    body += [("CH", (m, q)) for q in sup]
    body += [("CY", (m, q)) for q in sup]
    for j, (kind, qs) in enumerate(body):
        if flagged and j == len(body) - 1:
            c.append("CX", (m, f))
        c.append(kind, qs)
        if flagged and j == 0:
            c.append("CX", (m, f))
    c.append("MX", (m,))
    if flagged:
        c.append("MZ", (f,))
    return c


def logical_to_physical(code: StabilizerCode, virtual: PauliOperator) -> PauliOperator:
    """Map a k-qubit Pauli (with phase) onto the code's logical operators, Y -> i X Z."""
    acc = PauliOperator.identity(code.n).with_phase(virtual.phase)
    for i in range(code.k):
        letter = virtual.letter(i)
        if letter == "X":
            acc = multiply(acc, code.logical_x[i])
        elif letter == "Z":
            acc = multiply(acc, code.logical_z[i])
        elif letter == "Y":
            acc = multiply(acc, code.logical_y(i))
    return acc


def verify_logical_action(code: StabilizerCode, gate: SynthesizedGate, labels_list=None) -> bool:
    """Tableau check: every signed input logical stabilizer maps to its ideal image, stabilizers stay put.

    ``labels_list`` defaults to all six Pauli eigenstates on the addressed logical
    qubits with the others in |0>.
    """
    from itertools import product as cartesian

    from .encoder import LOGICAL_STATES, perfect_encoder
    from .tableau import simulate

    def signed(tab, p):
        o = tab.peek(p)
        return None if o is None or not o.deterministic else (-1 if o.const else 1)

    spec = gate.spec
    if labels_list is None:
        labels_list = []
        for combo in cartesian(sorted(LOGICAL_STATES), repeat=len(spec.targets)):
            labels = ["0"] * code.k
            for t, s in zip(spec.targets, combo):
                labels[t] = s
            labels_list.append(labels)
    n = gate.circuit.n_qubits
    for labels in labels_list:
        tab, _ = simulate(perfect_encoder(code, labels, n) + gate.circuit)
        for g in code.generators:
            if signed(tab, g.embed(n)) != 1:
                return False
        for i, s in enumerate(labels):
            basis, sign = LOGICAL_STATES[s]
            v = PauliOperator.single(code.k, i, basis).with_phase(sign)
            img = gates.conjugate(spec.kind, spec.targets, v)
            if signed(tab, logical_to_physical(code, img).embed(n)) != 1:
                return False
    return True
