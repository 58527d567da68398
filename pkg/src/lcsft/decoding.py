"""Lookup-table decoding for flag gadgets and an exhaustive small-weight DEM decoder."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit
from .code import StabilizerCode
from .faults import ensure_noisy
from .pauli import PauliOperator
from .propagation import FramePropagator


class DecodingError(ValueError):
    pass


# lookup tables -----------------------------------------------------------------------------

@dataclass
class LookupTable:
    """Signature -> correction on the data qubits.

    A signature is ``(detector mask, syndrome mask)``: the detector outcomes of the
    circuit together with the syndrome of the residual error, as obtained by a
    following (noise-free at this order) syndrome measurement.
    """
    code: StabilizerCode
    entries: dict[tuple[int, int], PauliOperator] = field(default_factory=dict)

    def add(self, key: tuple[int, int], correction: PauliOperator) -> None:
        have = self.entries.get(key)
        if have is None:
            self.entries[key] = correction
        elif not self.code.is_stabilizer_equivalent(have, correction):
            raise DecodingError(f"signature {key} maps to inequivalent corrections {have} and {correction}")
        elif correction.weight < have.weight:
            self.entries[key] = correction

    def lookup(self, key: tuple[int, int]) -> PauliOperator | None:
        return self.entries.get(key)

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        rows = [[d, s, str(p)] for (d, s), p in sorted(self.entries.items())]
        return json.dumps({"version": 1, "n": self.code.n, "entries": rows})


def build_lookup(circuit: Circuit, code: StabilizerCode, data_qubits=None) -> LookupTable:
    """Table over all single faults of ``circuit`` (and the empty path).

    Raises DecodingError when two faults share a signature but need inequivalent
    corrections, which means the fault set is not distinguishable.
    """
    noisy = ensure_noisy(circuit)
    dq = list(range(code.n)) if data_qubits is None else list(data_qubits)
    prop = FramePropagator(noisy, dq)
    table = LookupTable(code)
    table.add((0, 0), PauliOperator.identity(code.n))
    for site in noisy.fault_sites():
        for _, eff in prop.site_effects(site):
            r = PauliOperator(code.n, eff.x, eff.z)
            table.add((eff.detectors, code.syndrome_int(eff.x, eff.z)), r)
    return table


def weight_one_table(code: StabilizerCode) -> dict[int, PauliOperator]:
    """Syndrome -> lowest-weight correction over all errors of weight <= 1."""
    out = {0: PauliOperator.identity(code.n)}
    for q in range(code.n):
        for letter in "XYZ":
            e = PauliOperator.single(code.n, q, letter)
            out.setdefault(code.syndrome_int(e.x, e.z), e)
    return out


# detector error model ------------------------------------------------------------------------

@dataclass
class DetectorModel:
    n_detectors: int
    n_observables: int
    probs: np.ndarray            # merged probability per signature
    detectors: list[int]         # detector mask per signature
    observables: list[int]       # observable mask per signature
    raw_count: int = 0           # elementary faults before merging

    def __len__(self) -> int:
        return len(self.probs)


def _merge(a: float, b: float) -> float:
    return a + b - 2 * a * b


def signature_counts(circuit: Circuit) -> dict[tuple[int, int], dict[int, int]]:
    """(detectors, observables) -> {channel arity: number of elementary terms}."""
    noisy = ensure_noisy(circuit)
    prop = FramePropagator(noisy, [])
    out: dict[tuple[int, int], dict[int, int]] = {}
    for site in noisy.fault_sites():
        for _, eff in prop.site_effects(site):
            by_arity = out.setdefault((eff.detectors, eff.observables), {})
            by_arity[site.arity] = by_arity.get(site.arity, 0) + 1
    return out


def model_from_counts(counts: dict[tuple[int, int], dict[int, int]], p: float,
                      n_detectors: int, n_observables: int) -> DetectorModel:
    """Uniform-strength model from :func:`signature_counts` (independent terms XOR-merged)."""
    keys = sorted(k for k in counts if k != (0, 0))
    probs = []
    for k in keys:
        keep = 1.0
        for arity, m in counts[k].items():
            keep *= (1 - 2 * p / (4 ** arity - 1)) ** m
        probs.append((1 - keep) / 2)
    raw = sum(sum(c.values()) for c in counts.values())
    return DetectorModel(n_detectors, n_observables, np.array(probs),
                         [k[0] for k in keys], [k[1] for k in keys], raw)


def build_detector_model(circuit: Circuit, p: float | None = None) -> DetectorModel:
    """One entry per distinct (detectors, observables) signature of an elementary fault.

    Each term of a k-qubit channel has probability p/(4^k - 1); ``p`` overrides
    the channel strengths written in the circuit.
    """
    noisy = ensure_noisy(circuit, p if p else 1e-3)
    prop = FramePropagator(noisy, [])
    merged: dict[tuple[int, int], float] = {}
    raw = 0
    for site in noisy.fault_sites():
        ps = site.p if p is None else p
        per = ps / (4 ** site.arity - 1)
        for _, eff in prop.site_effects(site):
            raw += 1
            key = (eff.detectors, eff.observables)
            if key == (0, 0):
                continue
            merged[key] = _merge(merged[key], per) if key in merged else per
    keys = sorted(merged)
    return DetectorModel(noisy.num_detectors, len(noisy.observables),
                         np.array([merged[k] for k in keys]), [k[0] for k in keys], [k[1] for k in keys], raw)


class Decoder:
    """Most likely explanation among fault subsets of size <= 2 (memoized per syndrome).

    Without an exact match the subset of size <= 2 closest in Hamming distance
    wins; ties go to higher probability, then lower index.
    """

    def __init__(self, model: DetectorModel) -> None:
        self.model = model
        self.logp = np.log(model.probs) if len(model) else np.zeros(0)
        self.by_det: dict[int, list[int]] = {}
        for i, d in enumerate(model.detectors):
            self.by_det.setdefault(d, []).append(i)
        # best single explanation per detector mask (probability, then index)
        self.best_single = {d: max(idx, key=lambda i: (self.logp[i], -i)) for d, idx in self.by_det.items()}
        self._dets64 = (np.array(model.detectors, dtype=np.uint64)
                        if model.n_detectors <= 64 and len(model) else None)
        self._cache: dict[int, int] = {0: 0}
        self._single_keys = self._single_idx = self._pair_idx = None

    def decode(self, syndrome: int) -> int:
        hit = self._cache.get(syndrome)
        if hit is None:
            hit = self._solve(syndrome)
            self._cache[syndrome] = hit
        return hit

    def _solve(self, s: int) -> int:
        m = self.model
        best = None   # (score tuple, observables)
        if s in self.best_single:
            i = self.best_single[s]
            best = ((self.logp[i], -i, -1), m.observables[i])
        if self._dets64 is not None:
            pair = self._best_pair_exact(s)
            if pair is not None:
                i, j = pair
                score = (self.logp[i] + self.logp[j], -i, -j)
                if best is None or score > best[0]:
                    best = (score, m.observables[i] ^ m.observables[j])
        else:
            for i, d in enumerate(m.detectors):
                j = self.best_single.get(s ^ d)
                if j is None or j <= i:
                    continue
                score = (self.logp[i] + self.logp[j], -i, -j)
                if best is None or score > best[0]:
                    best = (score, m.observables[i] ^ m.observables[j])
        if best is not None:
            return best[1]
        return self._nearest(s)

    def _best_pair_exact(self, s: int) -> tuple[int, int] | None:
        """Highest-probability pair (i < j, j the best single for its mask) matching ``s`` exactly."""
        if self._single_keys is None:
            keys = np.array(sorted(self.best_single), dtype=np.uint64)
            self._single_keys = keys
            self._single_idx = np.array([self.best_single[int(k)] for k in keys], dtype=np.int64)
        need = self._dets64 ^ np.uint64(s)
        pos = np.searchsorted(self._single_keys, need)
        pos[pos == len(self._single_keys)] = 0
        hit = self._single_keys[pos] == need
        j = np.where(hit, self._single_idx[pos], -1)
        i = np.arange(len(j))
        ok = j > i
        if not ok.any():
            return None
        i, j = i[ok], j[ok]
        score = self.logp[i] + self.logp[j]
        # maximize score, then prefer smaller i, then smaller j
        k = np.lexsort((j, i, -score))[0]
        return int(i[k]), int(j[k])

    def _nearest(self, s: int) -> int:
        m = self.model
        n = len(m)
        if n == 0:
            return 0
        if self._dets64 is not None:
            ii, jj, xor, lp = self._subsets
            dist = np.bitwise_count(xor ^ np.uint64(s))
            cand = np.nonzero(dist == dist.min())[0]
            k = cand[np.lexsort((jj[cand], ii[cand], -lp[cand]))[0]]
            i, j = int(ii[k]), int(jj[k])
            return m.observables[i] ^ (m.observables[j] if j >= 0 else 0)
        best = None  # (distance, -logp, i, j)
        for i in range(n):
            cand = ((m.detectors[i] ^ s).bit_count(), -self.logp[i], i, -1)
            if best is None or cand < best:
                best = cand
            for j in range(i + 1, n):
                cand = ((m.detectors[i] ^ m.detectors[j] ^ s).bit_count(),
                        -(self.logp[i] + self.logp[j]), i, j)
                if cand < best:
                    best = cand
        _, _, i, j = best
        return m.observables[i] ^ (m.observables[j] if j >= 0 else 0)

    @property
    def _subsets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """All subsets of size 1 and 2: (i, j or -1, detector mask, log probability)."""
        if self._pair_idx is None:
            n = len(self.model)
            iu, ju = np.triu_indices(n, k=1)
            d = self._dets64
            self._pair_idx = (np.concatenate([np.arange(n), iu]), np.concatenate([np.full(n, -1), ju]),
                              np.concatenate([d, d[iu] ^ d[ju]]),
                              np.concatenate([self.logp, self.logp[iu] + self.logp[ju]]))
        return self._pair_idx

    def decode_batch(self, syndromes: np.ndarray) -> np.ndarray:
        uniq, inv = np.unique(syndromes, return_inverse=True)
        preds = np.array([self.decode(int(u)) for u in uniq], dtype=np.uint64)
        return preds[inv]


def decode(model: DetectorModel, detectors) -> int:
    """Observable-flip prediction for one detector vector (bit sequence or mask)."""
    if not isinstance(detectors, (int, np.integer)):
        bits = list(detectors)
        detectors = sum(int(b) << i for i, b in enumerate(bits))
    return Decoder(model).decode(int(detectors))
