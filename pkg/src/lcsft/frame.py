"""Bit-packed Pauli-frame sampling of noisy Clifford circuits.

Shots are packed 64 per uint64 word.  Every qubit carries an X row and a Z row of
frame bits; a measurement record bit is the flip relative to the noise-free
reference run.  Detectors are validated to be deterministic and zero in the
reference, so a detector sample is just the XOR of its record flips.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import gates
from .circuit import MEASUREMENTS, NOISE, RESETS, Circuit, CircuitError
from .pauli import PauliOperator

BLOCK = 1 << 14          # shots per independently seeded block


def n_words(shots: int) -> int:
    return (shots + 63) // 64


def unpack(packed: np.ndarray, shots: int) -> np.ndarray:
    """(rows, words) uint64 -> (shots, rows) uint8."""
    if packed.shape[0] == 0:
        return np.zeros((shots, 0), dtype=np.uint8)
    bits = np.unpackbits(np.ascontiguousarray(packed).view(np.uint8), axis=1, bitorder="little")
    return bits[:, :shots].T.copy()


def pack_rows(bits: np.ndarray) -> np.ndarray:
    """(shots, rows) 0/1 -> (rows, words) uint64."""
    shots, rows = bits.shape
    w = n_words(shots)
    padded = np.zeros((rows, w * 64), dtype=np.uint8)
    padded[:, :shots] = bits.T
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64)


def rows_to_ints(packed: np.ndarray, shots: int) -> np.ndarray:
    """Per-shot signature integer (bit r from row r); needs at most 64 rows."""
    rows = packed.shape[0]
    if rows > 64:
        raise ValueError("more than 64 rows do not fit one word")
    out = np.zeros(shots, dtype=np.uint64)
    bits = unpack(packed, shots)
    for r in range(rows):
        out |= bits[:, r].astype(np.uint64) << np.uint64(r)
    return out


def _linear_map(kind: str) -> list[list[int]]:
    """Output bit i of (x_0..x_{k-1}, z_0..z_{k-1}) as the XOR of listed input bits."""
    k = gates.arity(kind)
    cols = gates.symplectic_columns(kind)
    rows: list[list[int]] = [[] for _ in range(2 * k)]
    for j, (cx, cz) in enumerate(cols):
        for i in range(k):
            if (cx >> i) & 1:
                rows[i].append(j)
            if (cz >> i) & 1:
                rows[k + i].append(j)
    return rows


@dataclass
class SampleBatch:
    shots: int
    seed: int
    detectors: np.ndarray      # (n_detectors, words) uint64
    observables: np.ndarray    # (n_observables, words) uint64

    def detector_bits(self) -> np.ndarray:
        return unpack(self.detectors, self.shots)

    def observable_bits(self) -> np.ndarray:
        return unpack(self.observables, self.shots)

    def detector_ints(self) -> np.ndarray:
        return rows_to_ints(self.detectors, self.shots)

    def observable_ints(self) -> np.ndarray:
        return rows_to_ints(self.observables, self.shots)


class FrameSimulator:
    def __init__(self, circuit: Circuit, p: float | None = None) -> None:
        """Compile ``circuit``; ``p`` overrides the probability of every noise channel."""
        if circuit.has_non_clifford():
            raise CircuitError("frame sampling needs a Clifford circuit (no T gates)")
        self.circuit = circuit
        self.n = circuit.n_qubits
        self.n_meas = circuit.num_measurements
        ops = []
        rec = 0
        for idx, ins in enumerate(circuit.instructions):
            name = ins.name
            if name in NOISE:
                prob = ins.arg if p is None else p
                ops.append(("noise", np.array(ins.groups(), dtype=np.intp), float(prob), idx))
            elif name in RESETS:
                ops.append(("reset", np.array(ins.targets, dtype=np.intp)))
            elif name in MEASUREMENTS:
                ops.append((name, np.array(ins.targets, dtype=np.intp), rec))
            elif name == "MPP":
                prods = []
                for prod in ins.targets:
                    xs = [q for q, l in prod if l in "XY"]
                    zs = [q for q, l in prod if l in "ZY"]
                    prods.append((np.array(xs, dtype=np.intp), np.array(zs, dtype=np.intp)))
                ops.append(("MPP", prods, rec))
            elif ins.is_unitary:
                rows = _linear_map(name)
                k = gates.arity(name)
                if any(r != [i] for i, r in enumerate(rows)):
                    ops.append(("gate", np.array(ins.groups(), dtype=np.intp), rows, k))
            rec += ins.n_measurements
        self.ops = ops
        det_rows = [list(d) for d in circuit.detectors]
        obs_rows = [list(o) for o in circuit.observables]
        self.det_rows, self.obs_rows = det_rows, obs_rows

    def run_block(self, shots: int, rng: np.random.Generator | None, X: np.ndarray | None = None,
                  Z: np.ndarray | None = None, forced: dict | None = None
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Propagate one block; returns (record flips, final X, final Z), all packed.

        ``rng=None`` switches random noise off.  ``forced`` maps an instruction
        index of a noise channel to arrays ``(group, shot, term)`` of faults to
        apply there (term encodes qubit j's x bit at 2j and z bit at 2j+1).
        """
        w = n_words(shots)
        X = np.zeros((self.n, w), dtype=np.uint64) if X is None else X.copy()
        Z = np.zeros((self.n, w), dtype=np.uint64) if Z is None else Z.copy()
        rec = np.zeros((self.n_meas, w), dtype=np.uint64)
        for op in self.ops:
            kind = op[0]
            if kind == "gate":
                _, groups, rows, k = op
                ins = [X[groups[:, j]] for j in range(k)] + [Z[groups[:, j]] for j in range(k)]
                for i, r in enumerate(rows):
                    acc = ins[r[0]].copy() if r else np.zeros_like(ins[0])
                    for j in r[1:]:
                        acc ^= ins[j]
                    if i < k:
                        X[groups[:, i]] = acc
                    else:
                        Z[groups[:, i - k]] = acc
            elif kind == "noise":
                _, groups, prob, idx = op
                if rng is not None and prob > 0:
                    self._noise(X, Z, groups, prob, shots, rng)
                if forced and idx in forced:
                    g, pos, term = forced[idx]
                    _xor_terms(X, Z, groups[g], np.asarray(pos), np.asarray(term))
            elif kind == "reset":
                X[op[1]] = 0
                Z[op[1]] = 0
            elif kind == "MZ":
                _, qs, r0 = op
                rec[r0:r0 + len(qs)] = X[qs]
            elif kind == "MX":
                _, qs, r0 = op
                rec[r0:r0 + len(qs)] = Z[qs]
            else:  # MPP
                _, prods, r0 = op
                for j, (xs, zs) in enumerate(prods):
                    acc = np.zeros(w, dtype=np.uint64)
                    if len(zs):
                        acc ^= np.bitwise_xor.reduce(X[zs], axis=0)
                    if len(xs):
                        acc ^= np.bitwise_xor.reduce(Z[xs], axis=0)
                    rec[r0 + j] = acc
        return rec, X, Z

    @staticmethod
    def _noise(X, Z, groups, prob, shots, rng) -> None:
        k = groups.shape[1]
        counts = rng.binomial(shots, prob, size=len(groups))
        for g in np.nonzero(counts)[0]:
            m = int(counts[g])
            pos = rng.choice(shots, size=m, replace=False) if m > 1 else rng.integers(0, shots, size=1)
            term = rng.integers(1, 4 ** k, size=m)
            _xor_terms(X, Z, np.broadcast_to(groups[g], (m, k)), pos, term)

    def combine(self, rec: np.ndarray, rows: list[list[int]]) -> np.ndarray:
        out = np.zeros((len(rows), rec.shape[1]), dtype=np.uint64)
        for i, r in enumerate(rows):
            if r:
                out[i] = np.bitwise_xor.reduce(rec[r], axis=0)
        return out

    def sample(self, shots: int, seed: int, jobs: int = 1) -> SampleBatch:
        blocks = [(b, min(BLOCK, shots - b * BLOCK)) for b in range((shots + BLOCK - 1) // BLOCK)]
        if jobs > 1 and len(blocks) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                parts = list(ex.map(_sample_block, [(self, seed, b, s) for b, s in blocks]))
        else:
            parts = [_sample_block((self, seed, b, s)) for b, s in blocks]
        dets = _concat_packed([d for d, _ in parts], [s for _, s in blocks])
        obs = _concat_packed([o for _, o in parts], [s for _, s in blocks])
        return SampleBatch(shots, seed, dets, obs)


def _xor_terms(X, Z, qubits: np.ndarray, pos: np.ndarray, term: np.ndarray) -> None:
    """XOR Pauli ``term`` on ``qubits[i]`` (row per fault) into shot ``pos[i]``."""
    if len(pos) == 0:
        return
    word = pos >> 6
    bit = np.left_shift(np.uint64(1), (pos & 63).astype(np.uint64))
    for j in range(qubits.shape[1]):
        q = qubits[:, j]
        xb = ((term >> (2 * j)) & 1).astype(bool)
        zb = ((term >> (2 * j + 1)) & 1).astype(bool)
        if xb.any():
            np.bitwise_xor.at(X, (q[xb], word[xb]), bit[xb])
        if zb.any():
            np.bitwise_xor.at(Z, (q[zb], word[zb]), bit[zb])


def term_code(pauli: PauliOperator) -> int:
    """Encode a k-qubit Pauli as used by forced faults (x at bit 2j, z at bit 2j+1)."""
    out = 0
    for j in range(pauli.n):
        out |= ((pauli.x >> j) & 1) << (2 * j)
        out |= ((pauli.z >> j) & 1) << (2 * j + 1)
    return out


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, block]))


def _sample_block(args) -> tuple[np.ndarray, np.ndarray]:
    sim, seed, block, shots = args
    rec, _, _ = sim.run_block(shots, block_rng(seed, block))
    return sim.combine(rec, sim.det_rows), sim.combine(rec, sim.obs_rows)


def _concat_packed(parts: list[np.ndarray], sizes: list[int]) -> np.ndarray:
    """Concatenate packed blocks; every block but the last is a multiple of 64 shots."""
    if not parts:
        return np.zeros((0, 0), dtype=np.uint64)
    return np.concatenate(parts, axis=1)


def frame_sample(circuit: Circuit, p: float | None, shots: int, seed: int, jobs: int = 1) -> SampleBatch:
    if shots <= 0:
        raise ValueError("shots must be positive")
    if p is not None and not 0 <= p < 1:
        raise ValueError("p must lie in [0, 1)")
    return FrameSimulator(circuit, p).sample(shots, seed, jobs)


def frame_of(p: PauliOperator, n_qubits: int, shots: int) -> tuple[np.ndarray, np.ndarray]:
    """Packed frame holding the same Pauli ``p`` in every shot."""
    w = n_words(shots)
    X = np.zeros((n_qubits, w), dtype=np.uint64)
    Z = np.zeros((n_qubits, w), dtype=np.uint64)
    full = np.full(w, np.uint64(0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    if shots % 64:
        full[-1] = np.uint64((1 << (shots % 64)) - 1)
    for q in p.support:
        if (p.x >> q) & 1:
            X[q] = full
        if (p.z >> q) & 1:
            Z[q] = full
    return X, Z
