"""Noise-free preparation circuits for encoded logical Pauli eigenstates."""

from __future__ import annotations

from . import gates
from .circuit import Circuit
from .code import StabilizerCode
from .pauli import PauliOperator, multiply

LOGICAL_STATES = {
    "0": ("Z", 0), "1": ("Z", 2),
    "+": ("X", 0), "-": ("X", 2),
    "+i": ("Y", 0), "-i": ("Y", 2),
}


def parse_state_spec(spec, k: int) -> list[str]:
    """Accept a list/tuple of labels or a comma string like ``"+,0,0"``."""
    labels = [s.strip() for s in spec.split(",")] if isinstance(spec, str) else list(spec)
    if len(labels) != k:
        raise ValueError(f"expected {k} logical labels, got {labels}")
    for s in labels:
        if s not in LOGICAL_STATES:
            raise ValueError(f"unknown logical state {s!r}; choose from {sorted(LOGICAL_STATES)}")
    return labels


def state_stabilizers(code: StabilizerCode, labels: list[str]) -> list[PauliOperator]:
    """Signed logical operators fixing the requested logical product state."""
    out = []
    for i, s in enumerate(labels):
        basis, sign = LOGICAL_STATES[s]
        lg = code.logical(i, basis)
        out.append(lg.with_phase(lg.phase + sign))
    return out


_TO_X = {"X": [], "Z": ["H"], "Y": ["S"]}
_TO_Z = {"Z": [], "X": ["H"], "Y": ["S", "H"]}


def _synthesize(rows: list[PauliOperator]) -> tuple[list[tuple[str, tuple[int, ...]]], list[int]]:
    """Clifford V with V rows V^dagger = {+-Z_q}; returns (gates of V, qubits with sign -1)."""
    rows = list(rows)
    ops: list[tuple[str, tuple[int, ...]]] = []
    pivots: list[int] = []

    def apply(kind: str, qs: tuple[int, ...]) -> None:
        ops.append((kind, qs))
        for j in range(len(rows)):
            rows[j] = gates.conjugate(kind, qs, rows[j])

    for i in range(len(rows)):
        for j, q in enumerate(pivots):
            if (rows[i].x >> q) & 1:
                rows[i] = multiply(rows[i], rows[j])
        free = [q for q in rows[i].support if q not in pivots]
        if not free:
            raise ValueError("state operators are not independent")
        q = free[0]
        for kind in _TO_X[rows[i].letter(q)]:
            apply(kind, (q,))
        for r in free[1:]:
            for kind in _TO_Z[rows[i].letter(r)]:
                apply(kind, (r,))
            apply("CZ", (q, r))
        assert rows[i].support == [q] and rows[i].letter(q) == "X"
        for j in range(len(rows)):
            if j != i and (rows[j].x >> q) & 1:
                rows[j] = multiply(rows[j], rows[i])
        pivots.append(q)
    for q in pivots:
        apply("H", (q,))
    flips = [rows[i].support[0] for i in range(len(rows)) if rows[i].phase == 2]
    return ops, flips


def prepare_stabilizer_state(n_qubits: int, rows: list[PauliOperator]) -> Circuit:
    """Noise-free circuit preparing the state fixed by the ``n`` signed, commuting ``rows``."""
    ops, flips = _synthesize(rows)
    n = rows[0].n
    c = Circuit(n_qubits)
    c.append("RZ", range(n))
    if flips:
        c.append("X", sorted(flips))
    for kind, qs in reversed(ops):
        c.append(gates.inverse_kind(kind), qs)
    return c


def perfect_encoder(code: StabilizerCode, logical_state_spec, n_qubits: int | None = None) -> Circuit:
    labels = parse_state_spec(logical_state_spec, code.k)
    rows = list(code.generators) + state_stabilizers(code, labels)
    return prepare_stabilizer_state(n_qubits or code.n, rows)
