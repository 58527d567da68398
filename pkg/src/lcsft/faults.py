"""Exhaustive low-order fault enumeration, pair classification and circuit distance."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .circuit import MEASUREMENTS, RESETS, Circuit, FaultSite, depolarize_layer, with_noise
from .code import StabilizerCode
from .gf2 import parity
from .propagation import ElementaryFault, FaultEffect, FaultPath, FramePropagator

DEFAULT_P = 1e-3


@dataclass(frozen=True)
class CountingPolicy:
    """Which noise locations contribute elementary faults, and how.

    ``collapse_flip_sites`` keeps only the distinct nontrivial effects of channels
    attached to resets and measurements (so a Z-basis reset or readout counts as a
    single bit flip).  ``same_location_pairs`` lets two different terms of one
    channel form an order-2 path.  ``input_layer`` adds a single-qubit channel on
    every data qubit in front of the circuit, and ``include_empty`` adds the
    fault-free path to the population the pairs are drawn from.
    """
    gates: bool = True
    resets: bool = True
    measurements: bool = True
    collapse_flip_sites: bool = True
    same_location_pairs: bool = True
    input_layer: bool = False
    include_empty: bool = False


GATE_COUNTING = CountingPolicy()
# the logical CX counts come out with incoming data noise and the empty path included
CX_COUNTING = CountingPolicy(input_layer=True, include_empty=True)
ALL_TERMS = CountingPolicy(collapse_flip_sites=False, same_location_pairs=False)


def counting_policy(kind: str) -> CountingPolicy:
    return CX_COUNTING if kind == "CX" else GATE_COUNTING


def infer_data_qubits(circuit: Circuit) -> list[int]:
    """Qubits never reset or measured (everything else is treated as auxiliary)."""
    aux = set()
    for ins in circuit.instructions:
        if ins.name in RESETS or ins.name in MEASUREMENTS:
            aux |= ins.qubits()
    return [q for q in range(circuit.n_qubits) if q not in aux]


def ensure_noisy(circuit: Circuit, p: float = DEFAULT_P) -> Circuit:
    return circuit if circuit.fault_sites() else with_noise(circuit, p)


def site_kind(circuit: Circuit, site: FaultSite) -> str:
    ins = circuit.instructions
    i = site.instruction
    if i + 1 < len(ins) and ins[i + 1].name in MEASUREMENTS and set(site.qubits) <= ins[i + 1].qubits():
        return "measure"
    if i > 0:
        prev = ins[i - 1]
        if prev.name in RESETS:
            return "reset"
        if prev.is_unitary:
            return "gate"
    return "other"


@dataclass
class FaultTable:
    """Elementary faults of a circuit with their exact effects."""
    circuit: Circuit
    faults: list[ElementaryFault]
    effects: list[FaultEffect]
    location: list[int]          # site index per fault

    def __len__(self) -> int:
        return len(self.faults)


def elementary_faults(circuit: Circuit, data_qubits=None, policy: CountingPolicy = ALL_TERMS) -> FaultTable:
    noisy = ensure_noisy(circuit)
    if policy.input_layer:
        qs = range(circuit.n_qubits) if data_qubits is None else data_qubits
        noisy = depolarize_layer(noisy.n_qubits, qs, DEFAULT_P) + noisy
    prop = FramePropagator(noisy, data_qubits)
    faults, effects, location = [], [], []
    for s, site in enumerate(noisy.fault_sites()):
        kind = site_kind(noisy, site)
        if kind == "gate" and not policy.gates:
            continue
        if kind == "reset" and not policy.resets:
            continue
        if kind == "measure" and not policy.measurements:
            continue
        seen = set()
        for term, eff in prop.site_effects(site):
            if policy.collapse_flip_sites and kind in ("reset", "measure"):
                if eff.trivial or eff in seen:
                    continue
                seen.add(eff)
            faults.append(ElementaryFault(site, term))
            effects.append(eff)
            location.append(s)
    return FaultTable(noisy, faults, effects, location)


def enumerate_fault_paths(circuit: Circuit, order: int, policy: CountingPolicy = GATE_COUNTING,
                          data_qubits=None):
    """Yield all order-1 or order-2 fault paths in a fixed order."""
    if order not in (1, 2):
        raise ValueError("only fault paths of order 1 and 2 are enumerated")
    if data_qubits is None:
        data_qubits = infer_data_qubits(circuit)
    table = elementary_faults(circuit, data_qubits, policy)
    if order == 1:
        for f in table.faults:
            yield FaultPath((f,))
        return
    if policy.include_empty:
        for f in table.faults:
            yield FaultPath((f,))
    for i, j in combinations(range(len(table)), 2):
        if policy.same_location_pairs or table.location[i] != table.location[j]:
            yield FaultPath((table.faults[i], table.faults[j]))


def _logical_mask(code: StabilizerCode, x: int, z: int) -> int:
    out = 0
    for i, lg in enumerate(code.logicals):
        if parity((x & lg.z) ^ (z & lg.x)):
            out |= 1 << i
    return out


def _keys(table: FaultTable, code: StabilizerCode) -> list[tuple[tuple[int, int], int]]:
    return [((e.detectors, code.syndrome_int(e.x, e.z)), _logical_mask(code, e.x, e.z)) for e in table.effects]


@dataclass
class PairReport:
    uncorrectable: int
    total_pairs: int
    n_elementary: int
    witnesses: list[FaultPath] = field(default_factory=list)


def _bad_pairs(keys, members) -> int:
    groups: dict = defaultdict(Counter)
    for i in members:
        k, lg = keys[i]
        groups[k][lg] += 1
    bad = 0
    for cnt in groups.values():
        m = sum(cnt.values())
        bad += m * (m - 1) // 2 - sum(c * (c - 1) // 2 for c in cnt.values())
    return bad


def classify_fault_pairs(circuit: Circuit, code: StabilizerCode, policy: CountingPolicy = GATE_COUNTING,
                         max_witnesses: int = 10) -> PairReport:
    """Order-2 paths with trivial detectors and a residual that is a nontrivial logical.

    Two elementary faults combine to such a path exactly when they share detector
    outcome and residual syndrome but act differently on the logical operators.
    """
    table = elementary_faults(circuit, range(code.n), policy)
    keys = _keys(table, code)
    faults = list(table.faults)
    location = list(table.location)
    if policy.include_empty:
        keys.insert(0, ((0, 0), 0))
        faults.insert(0, None)
        location.insert(0, -1)
    n = len(keys)
    bad = _bad_pairs(keys, range(n))
    total = n * (n - 1) // 2
    if not policy.same_location_pairs:
        by_loc = defaultdict(list)
        for i, s in enumerate(location):
            if s >= 0:
                by_loc[s].append(i)
        for members in by_loc.values():
            bad -= _bad_pairs(keys, members)
            total -= len(members) * (len(members) - 1) // 2
    witnesses = []
    first: dict = {}
    for i, (k, lg) in enumerate(keys):
        reps = first.setdefault(k, {})
        for lg2, j in reps.items():
            if lg2 != lg and len(witnesses) < max_witnesses and (
                    policy.same_location_pairs or location[i] != location[j]):
                witnesses.append(FaultPath(tuple(f for f in (faults[j], faults[i]) if f is not None)))
                break
        reps.setdefault(lg, i)
    return PairReport(bad, total, len(table), witnesses)


@dataclass
class DistinguishabilityReport:
    distinguishable: bool
    witness: tuple[FaultPath, FaultPath] | None
    counts: tuple[int, int]           # (pairs examined, violating pairs)


def check_distinguishability(circuit: Circuit, code: StabilizerCode, t: int = 1) -> DistinguishabilityReport:
    """Every pair from {no fault} and all single faults must differ in detectors or
    residual syndrome, or leave stabilizer-equivalent residuals."""
    if t != 1:
        raise ValueError("only t = 1 is supported")
    table = elementary_faults(circuit, range(code.n), ALL_TERMS)
    keys = [((0, 0), 0)] + _keys(table, code)
    paths = [FaultPath()] + [FaultPath((f,)) for f in table.faults]
    n = len(keys)
    bad = _bad_pairs(keys, range(n))
    witness = None
    first: dict = {}
    for i, (k, lg) in enumerate(keys):
        reps = first.setdefault(k, {})
        other = next((j for lg2, j in reps.items() if lg2 != lg), None)
        if other is not None:
            witness = (paths[other], paths[i])
            break
        reps.setdefault(lg, i)
    return DistinguishabilityReport(bad == 0, witness, (n * (n - 1) // 2, bad))


@dataclass
class DistanceResult:
    distance: int
    exact: bool       # False: nothing found up to the search bound, ``distance`` is a lower bound
    witness: list[ElementaryFault] = field(default_factory=list)


def circuit_distance_search(circuit: Circuit, max_order: int = 3) -> DistanceResult:
    """Smallest fault path flipping an observable with trivial detectors, searched up to order 3."""
    if not circuit.observables:
        raise ValueError("circuit has no observables")
    table = elementary_faults(circuit, None, ALL_TERMS)
    sig: dict[tuple[int, int], int] = {}
    for i, e in enumerate(table.effects):
        if e.detectors or e.observables:
            sig.setdefault((e.detectors, e.observables), i)
    items = list(sig.items())
    by_det: dict[int, dict[int, int]] = defaultdict(dict)
    for (d, o), i in items:
        by_det[d].setdefault(o, i)
    f = table.faults
    for (d, o), i in items:
        if d == 0 and o:
            return DistanceResult(1, True, [f[i]])
    if max_order >= 2:
        for d, obs in by_det.items():
            if len(obs) > 1:
                a, b = list(obs.values())[:2]
                return DistanceResult(2, True, [f[a], f[b]])
    if max_order >= 3:
        w = _order3(items, by_det)
        if w is not None:
            return DistanceResult(3, True, [f[i] for i in w])
    return DistanceResult(min(max_order, 3) + 1, False)


def _order3(items, by_det):
    dets = [d for (d, _), _ in items]
    obs = [o for (_, o), _ in items]
    idx = [i for _, i in items]
    if dets and max(dets).bit_length() <= 63:
        arr = np.array(dets, dtype=np.uint64)
        known = np.array(sorted(by_det), dtype=np.uint64)
        for a in range(len(items)):
            cand = np.nonzero(np.isin(arr[a + 1:] ^ arr[a], known))[0]
            for off in cand:
                b = a + 1 + int(off)
                need = obs[a] ^ obs[b]
                for oc, c in by_det[dets[a] ^ dets[b]].items():
                    if oc != need:
                        return idx[a], idx[b], c
        return None
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            d = dets[a] ^ dets[b]
            if d in by_det:
                need = obs[a] ^ obs[b]
                for oc, c in by_det[d].items():
                    if oc != need:
                        return idx[a], idx[b], c
    return None


def circuit_distance(circuit: Circuit, max_order: int = 3) -> int:
    return circuit_distance_search(circuit, max_order).distance
