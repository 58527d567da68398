"""Exact n-qubit Pauli operators with mod-4 phase.

A Pauli is stored as two Python-int bitmasks (bit ``q`` set means a non-trivial
X/Z component on qubit ``q``) plus an integer ``phase`` such that the operator
equals ``i**phase`` times the tensor product of the letters I/X/Y/Z.  The letter
at qubit ``q`` is I/X/Z/Y for ``(x, z) = (0,0)/(1,0)/(0,1)/(1,1)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

import numpy as np

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_SIGNS = {"+": 0, "+i": 1, "-": 2, "-i": 3}
_SIGN_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_TERM_RE = re.compile(r"^([IXYZ])(\d+)$")


def popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self) -> None:
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError(f"bits outside of {self.n} qubits")
        object.__setattr__(self, "phase", self.phase % 4)

    # construction -----------------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> PauliOperator:
        return cls(n)

    @classmethod
    def from_sparse(cls, n: int, terms: dict[int, str] | Iterable[tuple[int, str]], phase: int = 0) -> PauliOperator:
        items = terms.items() if isinstance(terms, dict) else terms
        x = z = 0
        for q, letter in items:
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for n={n}")
            bx, bz = _BITS[letter]
            x ^= bx << q
            z ^= bz << q
        return cls(n, x, z, phase)

    @classmethod
    def single(cls, n: int, q: int, letter: str) -> PauliOperator:
        return cls.from_sparse(n, {q: letter})

    @classmethod
    def from_letters(cls, letters: str, phase: int = 0) -> PauliOperator:
        """Dense form, e.g. ``"XIZY"`` with qubit 0 leftmost."""
        return cls.from_sparse(len(letters), [(q, c) for q, c in enumerate(letters) if c != "I"], phase)

    @classmethod
    def from_bits(cls, x_bits, z_bits, phase: int = 0) -> PauliOperator:
        x_bits = np.asarray(x_bits, dtype=np.uint8)
        z_bits = np.asarray(z_bits, dtype=np.uint8)
        if x_bits.shape != z_bits.shape:
            raise ValueError("x and z bit vectors differ in length")
        x = sum(1 << int(q) for q in np.flatnonzero(x_bits))
        z = sum(1 << int(q) for q in np.flatnonzero(z_bits))
        return cls(len(x_bits), x, z, phase)

    @classmethod
    def parse(cls, text: str, n: int) -> PauliOperator:
        """Parse ``"+X0*Y10*Z12"``; ``"+I"`` is the identity."""
        text = text.strip()
        m = re.match(r"^(\+i|-i|\+|-)?(.*)$", text)
        sign, body = m.group(1) or "+", m.group(2)
        phase = _SIGNS[sign]
        if body in ("", "I"):
            return cls(n, 0, 0, phase)
        terms = []
        for part in body.split("*"):
            tm = _TERM_RE.match(part.strip())
            if tm is None:
                raise ValueError(f"malformed Pauli term {part!r} in {text!r}")
            terms.append((int(tm.group(2)), tm.group(1)))
        qubits = [q for q, _ in terms]
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in {text!r}")
        return cls.from_sparse(n, terms, phase)

    # views -------------------------------------------------------------------
    def letter(self, q: int) -> str:
        return _LETTERS[((self.x >> q) & 1, (self.z >> q) & 1)]

    @property
    def x_bits(self) -> np.ndarray:
        return np.array([(self.x >> q) & 1 for q in range(self.n)], dtype=np.uint8)

    @property
    def z_bits(self) -> np.ndarray:
        return np.array([(self.z >> q) & 1 for q in range(self.n)], dtype=np.uint8)

    @property
    def support(self) -> list[int]:
        s = self.x | self.z
        return [q for q in range(self.n) if (s >> q) & 1]

    @property
    def weight(self) -> int:
        return popcount(self.x | self.z)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.n))

    def __str__(self) -> str:
        body = "*".join(f"{self.letter(q)}{q}" for q in self.support) or "I"
        return _SIGN_TEXT[self.phase] + body

    def __repr__(self) -> str:
        return f"PauliOperator({self.n}, {self})"

    # algebra -----------------------------------------------------------------
    def _check(self, other: PauliOperator) -> None:
        if self.n != other.n:
            raise ValueError(f"Pauli length mismatch: {self.n} vs {other.n}")

    def __mul__(self, other: PauliOperator) -> PauliOperator:
        return multiply(self, other)

    def commutes(self, other: PauliOperator) -> int:
        """Symplectic product: 0 if the two commute, 1 otherwise."""
        self._check(other)
        return popcount((self.x & other.z) ^ (self.z & other.x)) & 1

    def with_phase(self, phase: int) -> PauliOperator:
        return PauliOperator(self.n, self.x, self.z, phase)

    def unsigned(self) -> PauliOperator:
        return PauliOperator(self.n, self.x, self.z, 0)

    def inverse(self) -> PauliOperator:
        # letters are self-inverse, so only the scalar is inverted
        return PauliOperator(self.n, self.x, self.z, -self.phase)

    def embed(self, n: int, qubits: list[int] | None = None) -> PauliOperator:
        """Place this Pauli on ``qubits`` (default: the first ``self.n``) of an ``n``-qubit register."""
        qubits = list(range(self.n)) if qubits is None else qubits
        terms = [(qubits[q], self.letter(q)) for q in self.support]
        return PauliOperator.from_sparse(n, terms, self.phase)

    def restrict(self, qubits: list[int]) -> PauliOperator:
        terms = [(i, self.letter(q)) for i, q in enumerate(qubits) if self.letter(q) != "I"]
        return PauliOperator.from_sparse(len(qubits), terms)

    def to_matrix(self) -> np.ndarray:
        """Dense matrix, qubit 0 the most significant tensor factor."""
        mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
                "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1, -1])}
        out = np.array([[1.0 + 0j]])
        for q in range(self.n):
            out = np.kron(out, mats[self.letter(q)])
        return (1j ** self.phase) * out


def multiply(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    """Exact product ``p * q`` including the phase."""
    p._check(q)
    # convert to i^r X^x Z^z form (Y = i X Z), multiply, convert back
    r = p.phase + popcount(p.x & p.z) + q.phase + popcount(q.x & q.z) + 2 * popcount(p.z & q.x)
    x, z = p.x ^ q.x, p.z ^ q.z
    return PauliOperator(p.n, x, z, r - popcount(x & z))


def commutes(p: PauliOperator, q: PauliOperator) -> int:
    return p.commutes(q)


def weight(p: PauliOperator) -> int:
    return p.weight


def product(paulis: Iterable[PauliOperator], n: int | None = None) -> PauliOperator:
    it = iter(paulis)
    try:
        acc = next(it)
    except StopIteration:
        if n is None:
            raise ValueError("empty product needs n") from None
        return PauliOperator.identity(n)
    for p in it:
        acc = multiply(acc, p)
    return acc
