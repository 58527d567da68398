"""Small GF(2) helpers over Python-int bit vectors."""

from __future__ import annotations

import numpy as np


class XorBasis:
    """Incremental row-echelon basis; answers span membership and decompositions.

    Each stored row remembers which inserted vectors it is built from (as a
    bitmask over insertion order), so ``decompose`` can return the combination.
    """

    def __init__(self) -> None:
        self._rows: dict[int, tuple[int, int]] = {}  # pivot bit -> (vector, combination)
        self._count = 0

    def __len__(self) -> int:
        return len(self._rows)

    def reduce(self, v: int) -> tuple[int, int]:
        combo = 0
        while v:
            top = v.bit_length() - 1
            row = self._rows.get(top)
            if row is None:
                break
            v ^= row[0]
            combo ^= row[1]
        return v, combo

    def add(self, v: int) -> bool:
        """Insert ``v``; returns False if it was already in the span."""
        idx = self._count
        self._count += 1
        r, combo = self._reduce_full(v)
        if r == 0:
            return False
        self._rows[r.bit_length() - 1] = (r, combo ^ (1 << idx))
        return True

    def _reduce_full(self, v: int) -> tuple[int, int]:
        combo = 0
        changed = True
        while changed and v:
            changed = False
            top = v.bit_length() - 1
            row = self._rows.get(top)
            if row is not None:
                v ^= row[0]
                combo ^= row[1]
                changed = True
        return v, combo

    def contains(self, v: int) -> bool:
        return self._reduce_full(v)[0] == 0

    def decompose(self, v: int) -> int | None:
        """Bitmask of inserted vectors XOR-ing to ``v`` (None if outside the span)."""
        r, combo = self._reduce_full(v)
        return combo if r == 0 else None


def rows_to_ints(mat) -> list[int]:
    mat = np.asarray(mat, dtype=np.uint8) % 2
    return [sum(1 << int(j) for j in np.flatnonzero(row)) for row in mat]


def rank(mat) -> int:
    basis = XorBasis()
    for v in rows_to_ints(mat):
        basis.add(v)
    return len(basis)


def nullspace(mat, ncols: int) -> list[int]:
    """Basis of {v : mat @ v = 0} as int bit vectors."""
    rows = rows_to_ints(mat)
    # Gauss-Jordan over columns
    pivots: list[tuple[int, int]] = []  # (pivot column, row)
    work = list(rows)
    reduced: list[int] = []
    for col in range(ncols):
        bit = 1 << col
        sel = next((i for i, r in enumerate(work) if r & bit), None)
        if sel is None:
            continue
        row = work.pop(sel)
        work = [r ^ row if r & bit else r for r in work]
        reduced = [r ^ row if r & bit else r for r in reduced]
        reduced.append(row)
        pivots.append((col, len(reduced) - 1))
    pivot_cols = {c: reduced[i] for c, i in pivots}
    free = [c for c in range(ncols) if c not in pivot_cols]
    out = []
    for f in free:
        v = 1 << f
        for c, row in pivot_cols.items():
            if (row >> f) & 1:
                v |= 1 << c
        out.append(v)
    return out


def inverse(mat) -> np.ndarray:
    mat = np.asarray(mat, dtype=np.uint8) % 2
    k = mat.shape[0]
    aug = np.concatenate([mat, np.eye(k, dtype=np.uint8)], axis=1)
    for col in range(k):
        piv = next((r for r in range(col, k) if aug[r, col]), None)
        if piv is None:
            raise ValueError("matrix is singular over GF(2)")
        aug[[col, piv]] = aug[[piv, col]]
        for r in range(k):
            if r != col and aug[r, col]:
                aug[r] ^= aug[col]
    return aug[:, k:]


def parity(v: int) -> int:
    return bin(v).count("1") & 1
