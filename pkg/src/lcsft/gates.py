"""Gate catalogue: dense unitaries and the Pauli conjugation tables derived from them.

Every unitary kind is defined by its matrix (first target = most significant
tensor factor).  Clifford kinds get a conjugation table computed once, by brute
force, from ``U P U^dagger``; nothing here is hand-coded.

Pauli-controlled-Pauli: ``PCP' = (I+P)/2 (x) I + (I-P)/2 (x) P'``, so ``ZCX`` is
the usual CNOT.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .pauli import PauliOperator

I2 = np.eye(2, dtype=complex)
PAULI_MATS = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])
_T = np.diag([1, np.exp(1j * np.pi / 4)])
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def pcp_matrix(p: str, q: str) -> np.ndarray:
    P, Q = PAULI_MATS[p], PAULI_MATS[q]
    return np.kron((I2 + P) / 2, I2) + np.kron((I2 - P) / 2, Q)


def controlled(u: np.ndarray) -> np.ndarray:
    d = u.shape[0]
    return np.kron(P0, np.eye(d)) + np.kron(P1, u)


def _build_unitaries() -> dict[str, np.ndarray]:
    u = {
        "I": I2, "X": PAULI_MATS["X"], "Y": PAULI_MATS["Y"], "Z": PAULI_MATS["Z"],
        "H": _H, "S": _S, "S_DAG": _S.conj().T, "T": _T,
    }
    for a, b in product("XYZ", repeat=2):
        u[f"{a}C{b}"] = pcp_matrix(a, b)
        u[f"C_{a}C{b}"] = controlled(pcp_matrix(a, b))
    u["CX"], u["CY"], u["CZ"] = u["ZCX"], u["ZCY"], u["ZCZ"]
    u["CH"] = controlled(_H)
    u["CS_DAG"] = controlled(_S.conj().T)
    u["SWAP"] = np.eye(4)[[0, 2, 1, 3]].astype(complex)
    return u


UNITARIES = _build_unitaries()


def arity(kind: str) -> int:
    return int(round(np.log2(UNITARIES[kind].shape[0])))


@dataclass(frozen=True)
class ConjugationEntry:
    x: int       # local bitmask, bit j = target j
    z: int
    phase: int   # i**phase multiplies the image


def _local_matrix(k: int, x: int, z: int) -> np.ndarray:
    # local letter order: target 0 is the most significant factor
    letters = [PauliOperator(k, x, z).letter(j) for j in range(k)]
    m = np.array([[1.0 + 0j]])
    for c in letters:
        m = np.kron(m, PAULI_MATS[c])
    return m


@lru_cache(maxsize=None)
def conjugation_table(kind: str) -> dict[tuple[int, int], ConjugationEntry] | None:
    """Map (x, z) local bits of a Pauli (phase 0) to its image under ``U . U^dagger``.

    Returns None for non-Clifford kinds.
    """
    u = UNITARIES[kind]
    k = arity(kind)
    table = {}
    basis = {(x, z): _local_matrix(k, x, z) for x in range(1 << k) for z in range(1 << k)}
    for (x, z), m in basis.items():
        img = u @ m @ u.conj().T
        found = None
        for (x2, z2), m2 in basis.items():
            # img = c * m2 with |c| = 1 and c a power of i
            c = np.trace(m2.conj().T @ img) / (1 << k)
            if abs(abs(c) - 1) < 1e-9:
                ph = int(round(np.angle(c) / (np.pi / 2))) % 4
                if np.allclose(img, (1j ** ph) * m2, atol=1e-9):
                    found = ConjugationEntry(x2, z2, ph)
                break
        if found is None:
            return None
        table[(x, z)] = found
    return table


def is_clifford(kind: str) -> bool:
    return conjugation_table(kind) is not None


@lru_cache(maxsize=None)
def symplectic_columns(kind: str) -> tuple[tuple[int, int], ...]:
    """Images of the 2k basis bits (X_0..X_{k-1}, Z_0..Z_{k-1}) as (x, z) local masks."""
    table = conjugation_table(kind)
    if table is None:
        raise ValueError(f"{kind} is not a Clifford gate")
    k = arity(kind)
    cols = [(table[(1 << j, 0)].x, table[(1 << j, 0)].z) for j in range(k)]
    cols += [(table[(0, 1 << j)].x, table[(0, 1 << j)].z) for j in range(k)]
    return tuple(cols)


def conjugate_local(kind: str, x: int, z: int, phase: int = 0) -> tuple[int, int, int]:
    table = conjugation_table(kind)
    if table is None:
        raise ValueError(f"cannot conjugate through non-Clifford gate {kind}")
    e = table[(x, z)]
    return e.x, e.z, (phase + e.phase) % 4


def conjugate(kind: str, targets: list[int] | tuple[int, ...], p: PauliOperator) -> PauliOperator:
    """``U p U^dagger`` for gate ``kind`` acting on ``targets`` of ``p``'s register."""
    lx = lz = 0
    for j, q in enumerate(targets):
        lx |= ((p.x >> q) & 1) << j
        lz |= ((p.z >> q) & 1) << j
    nx, nz, ph = conjugate_local(kind, lx, lz, p.phase)
    x, z = p.x, p.z
    for j, q in enumerate(targets):
        x = (x & ~(1 << q)) | (((nx >> j) & 1) << q)
        z = (z & ~(1 << q)) | (((nz >> j) & 1) << q)
    return PauliOperator(p.n, x, z, ph)


INVERSES = {"S": "S_DAG", "S_DAG": "S", "T": None}


def inverse_kind(kind: str) -> str:
    """Name of the inverse gate (self-inverse for Paulis, H, and all PCP variants)."""
    if kind in INVERSES:
        inv = INVERSES[kind]
        if inv is None:
            raise ValueError(f"no inverse kind registered for {kind}")
        return inv
    u = UNITARIES[kind]
    if not np.allclose(u @ u, np.eye(u.shape[0])):
        raise ValueError(f"no inverse kind registered for {kind}")
    return kind
