"""CSS stabilizer codes, the [[15,3,3]] lift-connected surface code, and syndrome queries."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, product
from pathlib import Path

import numpy as np

from . import gf2
from .pauli import PauliOperator, multiply


class CodeError(ValueError):
    pass


class PauliClass(str, Enum):
    IDENTITY = "identity-class"
    STABILIZER = "stabilizer"
    LOGICAL = "logical"
    DETECTABLE = "detectable-error"


def _symplectic(p: PauliOperator) -> int:
    return p.x | (p.z << p.n)


@dataclass(frozen=True)
class StabilizerCode:
    n: int
    generators: tuple[PauliOperator, ...]
    logical_x: tuple[PauliOperator, ...]
    logical_z: tuple[PauliOperator, ...]
    name: str = "code"
    _basis: gf2.XorBasis = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        basis = gf2.XorBasis()
        for g in self.generators:
            if g.n != self.n:
                raise CodeError("generator length differs from n")
            basis.add(_symplectic(g))
        object.__setattr__(self, "_basis", basis)
        for a, b in combinations(self.generators, 2):
            if a.commutes(b):
                raise CodeError(f"generators {a} and {b} do not commute")
        if self.k <= 0:
            raise CodeError("code encodes no logical qubits")
        if len(self.logical_x) != self.k or len(self.logical_z) != self.k:
            raise CodeError(f"expected {self.k} logical pairs")
        for i, j in product(range(self.k), repeat=2):
            if self.logical_x[i].commutes(self.logical_z[j]) != (i == j):
                raise CodeError(f"logical X{i}/Z{j} have the wrong commutation")
            if self.logical_x[i].commutes(self.logical_x[j]) or self.logical_z[i].commutes(self.logical_z[j]):
                raise CodeError("logical operators of the same type must commute")
        for lg in self.logical_x + self.logical_z:
            if any(lg.commutes(g) for g in self.generators):
                raise CodeError(f"logical {lg} anticommutes with a generator")

    @property
    def rank(self) -> int:
        return len(self._basis)

    @property
    def k(self) -> int:
        return self.n - self.rank

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    def logical_y(self, i: int) -> PauliOperator:
        # Y = i X Z
        return multiply(self.logical_x[i], self.logical_z[i]).with_phase(
            multiply(self.logical_x[i], self.logical_z[i]).phase + 1)

    def logical(self, i: int, basis: str) -> PauliOperator:
        return {"X": self.logical_x[i], "Z": self.logical_z[i], "Y": self.logical_y(i)}[basis]

    @property
    def logicals(self) -> tuple[PauliOperator, ...]:
        return self.logical_x + self.logical_z

    def support(self, i: int) -> list[int]:
        return sorted(set(self.logical_x[i].support) | set(self.logical_z[i].support))

    def x_generators(self) -> list[int]:
        return [i for i, g in enumerate(self.generators) if g.z == 0]

    def z_generators(self) -> list[int]:
        return [i for i, g in enumerate(self.generators) if g.x == 0]

    # queries ---------------------------------------------------------------
    def syndrome(self, error: PauliOperator) -> np.ndarray:
        if error.n != self.n:
            raise CodeError(f"error has {error.n} qubits, code has {self.n}")
        return np.array([error.commutes(g) for g in self.generators], dtype=np.uint8)

    def syndrome_int(self, x: int, z: int) -> int:
        """Syndrome packed as an int, bit i for generator i (fast path, no phase)."""
        out = 0
        for i, g in enumerate(self.generators):
            if gf2.parity((x & g.z) ^ (z & g.x)):
                out |= 1 << i
        return out

    def in_stabilizer_span(self, p: PauliOperator) -> bool:
        return self._basis.contains(_symplectic(p))

    def stabilizer_decomposition(self, p: PauliOperator) -> list[int] | None:
        combo = self._basis.decompose(_symplectic(p))
        if combo is None:
            return None
        return [i for i in range(self.n_generators) if (combo >> i) & 1]

    def classify(self, p: PauliOperator) -> PauliClass:
        if p.n != self.n:
            raise CodeError(f"operator has {p.n} qubits, code has {self.n}")
        if p.is_identity:
            return PauliClass.IDENTITY
        if self.syndrome(p).any():
            return PauliClass.DETECTABLE
        return PauliClass.STABILIZER if self.in_stabilizer_span(p) else PauliClass.LOGICAL

    def is_stabilizer_equivalent(self, a: PauliOperator, b: PauliOperator) -> bool:
        return self._basis.contains(_symplectic(a) ^ _symplectic(b))

    def logical_flips(self, p: PauliOperator) -> int:
        """Bitmask over ``logicals`` (X0..X{k-1}, Z0..) of operators anticommuting with ``p``."""
        return sum(p.commutes(lg) << i for i, lg in enumerate(self.logicals))

    def stabilizer_sign(self, p: PauliOperator) -> int | None:
        """+1/-1 if ``p`` (with its phase) lies in the signed stabilizer group, else None."""
        idx = self.stabilizer_decomposition(p)
        if idx is None:
            return None
        acc = PauliOperator.identity(self.n)
        for i in idx:
            acc = multiply(acc, self.generators[i])
        rel = (p.phase - acc.phase) % 4
        if rel == 0:
            return 1
        if rel == 2:
            return -1
        return None

    def min_weight_logical(self, max_weight: int = 3) -> int | None:
        """Brute-force distance: smallest weight of a logical (None if > max_weight)."""
        for w in range(1, max_weight + 1):
            for qubits in combinations(range(self.n), w):
                for letters in product("XYZ", repeat=w):
                    p = PauliOperator.from_sparse(self.n, zip(qubits, letters))
                    if self.classify(p) is PauliClass.LOGICAL:
                        return w
        return None

    def check_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        hx = np.array([g.x_bits for g in self.generators if g.z == 0 and g.x], dtype=np.uint8)
        hz = np.array([g.z_bits for g in self.generators if g.x == 0 and g.z], dtype=np.uint8)
        return hx, hz


def _from_supports(n: int, supports: list[list[int]], letter: str) -> list[PauliOperator]:
    return [PauliOperator.from_sparse(n, [(q, letter) for q in s]) for s in supports]


LCS_X_SUPPORTS = [
    [0, 6, 7, 12], [1, 7, 8, 13], [2, 6, 8, 14],
    [3, 9, 10, 12, 14], [4, 10, 11, 12, 13], [5, 9, 11, 13, 14],
]
LCS_Z_SUPPORTS = [
    [0, 3, 4, 12], [1, 4, 5, 13], [2, 3, 5, 14],
    [6, 9, 10, 12, 14], [7, 10, 11, 12, 13], [8, 9, 11, 13, 14],
]
LCS_LOGICAL_SUPPORTS = [[0, 10, 12], [1, 11, 13], [2, 9, 14]]


def lcs_15_3_3() -> StabilizerCode:
    """The (l, L) = (1, 3) lift-connected surface code, generators S_X^(0..5) then S_Z^(0..5)."""
    n = 15
    gens = _from_supports(n, LCS_X_SUPPORTS, "X") + _from_supports(n, LCS_Z_SUPPORTS, "Z")
    lx = _from_supports(n, LCS_LOGICAL_SUPPORTS, "X")
    lz = _from_supports(n, LCS_LOGICAL_SUPPORTS, "Z")
    return StabilizerCode(n, tuple(gens), tuple(lx), tuple(lz), name="LCS[[15,3,3]]")


def _css_logicals(hx: np.ndarray, hz: np.ndarray, n: int) -> tuple[list[int], list[int]]:
    """Canonical X/Z logical bit vectors for a CSS code via GF(2) elimination."""

    def complement(stab_rows: np.ndarray, check_rows: np.ndarray) -> list[int]:
        # vectors in ker(check) that are independent of rowspace(stab)
        ker = gf2.nullspace(check_rows, n) if len(check_rows) else [1 << j for j in range(n)]
        basis = gf2.XorBasis()
        for v in gf2.rows_to_ints(stab_rows) if len(stab_rows) else []:
            basis.add(v)
        out = []
        for v in ker:
            if basis.add(v):
                out.append(v)
        return out

    lx = complement(hx, hz)
    lz = complement(hz, hx)
    if len(lx) != len(lz):
        raise CodeError("inconsistent logical counts")
    k = len(lx)
    if k == 0:
        return [], []
    m = np.array([[gf2.parity(a & b) for b in lz] for a in lx], dtype=np.uint8)
    a = gf2.inverse(m).T
    new_lz = []
    for i in range(k):
        v = 0
        for j in range(k):
            if a[i, j]:
                v ^= lz[j]
        new_lz.append(v)
    return lx, new_lz


def from_check_matrices(hx, hz, logicals: tuple[list[PauliOperator], list[PauliOperator]] | None = None,
                        name: str = "css") -> StabilizerCode:
    hx = np.atleast_2d(np.asarray(hx, dtype=np.uint8) % 2)
    hz = np.atleast_2d(np.asarray(hz, dtype=np.uint8) % 2)
    n = hx.shape[1] if hx.size else hz.shape[1]
    if hx.size and hz.size and ((hx.astype(int) @ hz.T.astype(int)) % 2).any():
        raise CodeError("Hx Hz^T != 0: X and Z checks do not commute")
    gens = [PauliOperator.from_bits(r, np.zeros(n, np.uint8)) for r in hx if r.any()]
    gens += [PauliOperator.from_bits(np.zeros(n, np.uint8), r) for r in hz if r.any()]
    if gf2.rank(hx) + gf2.rank(hz) >= n:
        raise CodeError("check matrices leave k <= 0")
    if logicals is None:
        lx_bits, lz_bits = _css_logicals(hx, hz, n)
        lx = [PauliOperator(n, v, 0) for v in lx_bits]
        lz = [PauliOperator(n, 0, v) for v in lz_bits]
    else:
        lx, lz = logicals
    # drop dependent rows so that generator count equals the rank
    basis = gf2.XorBasis()
    indep = [g for g in gens if basis.add(_symplectic(g))]
    return StabilizerCode(n, tuple(indep), tuple(lx), tuple(lz), name=name)


# file format ---------------------------------------------------------------

def load_check_file(path: str | Path) -> StabilizerCode:
    """Read sections ``HX``/``HZ`` (rows of 0/1) and optional ``LX``/``LZ`` (Pauli strings)."""
    sections: dict[str, list[str]] = {}
    current = None
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.upper() in ("HX", "HZ", "LX", "LZ"):
            current = line.upper()
            sections[current] = []
            continue
        if current is None:
            raise CodeError(f"data before a section header: {line!r}")
        sections[current].append(line)

    def matrix(key: str) -> np.ndarray:
        rows = sections.get(key, [])
        if any(set(r) - {"0", "1"} for r in rows):
            raise CodeError(f"section {key} has non-binary characters")
        return np.array([[int(c) for c in r] for r in rows], dtype=np.uint8)

    hx, hz = matrix("HX"), matrix("HZ")
    n = hx.shape[1] if hx.size else hz.shape[1]
    logicals = None
    if "LX" in sections or "LZ" in sections:
        logicals = ([PauliOperator.parse(s, n) for s in sections.get("LX", [])],
                    [PauliOperator.parse(s, n) for s in sections.get("LZ", [])])
    return from_check_matrices(hx, hz, logicals, name=Path(path).stem)


def dump_check_file(code: StabilizerCode, path: str | Path) -> None:
    hx, hz = code.check_matrices()
    lines = ["HX"] + ["".join(map(str, r)) for r in hx]
    lines += ["HZ"] + ["".join(map(str, r)) for r in hz]
    lines += ["LX"] + [str(p) for p in code.logical_x]
    lines += ["LZ"] + [str(p) for p in code.logical_z]
    Path(path).write_text("\n".join(lines) + "\n")
