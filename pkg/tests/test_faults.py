from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcsft.circuit import Circuit, with_noise
from lcsft.encoder import perfect_encoder
from lcsft.faults import (ALL_TERMS, check_distinguishability, circuit_distance, circuit_distance_search,
                          classify_fault_pairs, counting_policy, elementary_faults)
from lcsft.frame import FrameSimulator, frame_sample, rows_to_ints, term_code
from lcsft.pauli import PauliOperator
from lcsft.propagation import ElementaryFault, FaultPath, FramePropagator, site_terms
from lcsft.statevector import expectation, sv_run_trajectory
from lcsft.synth import GateSpec, synth_logical, synth_syndrome_extraction

PAIR_COUNTS = {("H", (0,), "bare"): (66, 1953), ("H", (0,), "flagged"): (68, 44850),
               ("CX", (0, 1), "bare"): (28, 16290), ("CX", (0, 1), "flagged"): (36, 69378)}


@pytest.mark.parametrize("key", PAIR_COUNTS, ids=lambda k: f"{k[0]}-{k[2]}")
def test_fault_pair_counts(code, key):
    kind, targets, flavor = key
    c = synth_logical(code, GateSpec(kind, targets, flavor)).circuit
    rep = classify_fault_pairs(c, code, counting_policy(kind))
    assert (rep.uncorrectable, rep.total_pairs) == PAIR_COUNTS[key]


def test_pair_witness_is_a_logical_error(code):
    c = synth_logical(code, GateSpec("H", (0,), "bare")).circuit
    rep = classify_fault_pairs(c, code, counting_policy("H"))
    prop = FramePropagator(with_noise(c, 1e-3), range(15))
    for path in rep.witnesses:
        eff = prop.path_effect(path)
        r = PauliOperator(15, eff.x, eff.z)
        assert eff.detectors == 0 and not code.syndrome(r).any() and code.logical_flips(r)


def test_distinguishability(code):
    assert check_distinguishability(synth_logical(code, GateSpec("S", (1,))).circuit, code).distinguishable
    bare = check_distinguishability(synth_logical(code, GateSpec("H", (0,), "bare")).circuit, code)
    assert not bare.distinguishable and bare.witness is not None


def repetition_memory(n):
    c = Circuit(n).append("RZ", range(n)).append("DEPOLARIZE1", range(n), 0.01)
    c.measure_pauli([PauliOperator.from_sparse(n, {i: "Z", i + 1: "Z"}) for i in range(n - 1)])
    for i in range(n - 1):
        c.detector(i)
    c.measure_pauli([PauliOperator.single(n, 0, "Z")])
    c.observable(0, [n - 1])
    return c


def brute_force_distance(circuit, max_order):
    table = elementary_faults(circuit, None, ALL_TERMS)
    effs = [(e.detectors, e.observables) for e in table.effects]
    for order in range(1, max_order + 1):
        for combo in combinations(range(len(effs)), order):
            d = o = 0
            for i in combo:
                d ^= effs[i][0]
                o ^= effs[i][1]
            if d == 0 and o:
                return order
    return max_order + 1


@pytest.mark.parametrize("n", [2, 3, 4])
def test_circuit_distance_matches_brute_force(n):
    c = repetition_memory(n)
    assert circuit_distance(c) == min(brute_force_distance(c, 4), 4)
    assert brute_force_distance(c, 4) == n
    res = circuit_distance_search(c)
    assert res.exact == (n <= 3)
    if res.exact:
        assert len(res.witness) == n


def test_memory_circuit_distance(code):
    from lcsft.protocols import memory_circuit
    mc = memory_circuit(code, GateSpec("H", (2,)), ["0", "0", "+i"])
    assert circuit_distance(mc.circuit) == 3


# frame propagation against an independent statevector run ----------------------------------

def term_pauli(k, term):
    """Inverse of the term code: x bit of qubit j at bit 2j, z bit at 2j + 1."""
    return PauliOperator(k, sum(((term >> 2 * j) & 1) << j for j in range(k)),
                         sum(((term >> (2 * j + 1)) & 1) << j for j in range(k)))


def _round_circuit(code):
    rnd = synth_syndrome_extraction(code, True, reuse_ancilla=True)
    prefix = perfect_encoder(code, "+,0,-i", rnd.n_qubits)
    return prefix, prefix + with_noise(rnd, 1e-3)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_single_fault_matches_statevector(code, data):
    prefix, full = _round_circuit(code)
    sites = [s for s in full.fault_sites() if s.instruction >= len(prefix.instructions)]
    site = data.draw(st.sampled_from(sites))
    term = data.draw(st.integers(1, 4 ** site.arity - 1))
    pauli = term_pauli(site.arity, term)
    assert term_code(pauli) == term
    eff = FramePropagator(full, range(15)).effect(ElementaryFault(site, pauli))
    clean = sv_run_trajectory(full, 0.0, 0, faults={})
    faulty = sv_run_trajectory(full, 0.0, 0, faults={(site.instruction, site.group): term})
    d_clean, d_fault = clean.detectors(full), faulty.detectors(full)
    flips = sum((a ^ b) << k for k, (a, b) in enumerate(zip(d_clean, d_fault)))
    assert flips == eff.detectors
    residual = PauliOperator(15, eff.x, eff.z)
    for op in list(code.generators) + list(code.logicals):
        wide = op.embed(full.n_qubits)
        sign = -1 if residual.commutes(op) else 1
        assert np.isclose(expectation(faulty.state, wide), sign * expectation(clean.state, wide))


def test_forced_frame_fault_matches_propagator(code):
    c = with_noise(synth_logical(code, GateSpec("CX", (2, 0))).circuit, 1e-3)
    prop = FramePropagator(c, range(15))
    sim = FrameSimulator(c)
    sites = c.fault_sites()[::7]
    forced = {}
    want = []
    for shot, site in enumerate(sites):
        term = (shot % (4 ** site.arity - 1)) + 1
        forced.setdefault(site.instruction, ([], [], []))
        g, pos, t = forced[site.instruction]
        g.append(site.group), pos.append(shot), t.append(term)
        pauli = term_pauli(site.arity, term)
        want.append(prop.effect(ElementaryFault(site, pauli)).detectors)
    forced = {k: (np.array(g), np.array(p), np.array(t)) for k, (g, p, t) in forced.items()}
    rec, _, _ = sim.run_block(len(sites), None, forced=forced)
    got = rows_to_ints(sim.combine(rec, sim.det_rows), len(sites))
    assert [int(v) for v in got] == want


def test_frame_sampling_rate_and_determinism():
    c = Circuit(2).append("RZ", (0, 1)).append("DEPOLARIZE1", (0,), 0.3).append("CX", (0, 1))
    c.append("MZ", (0, 1)).append("DETECTOR", (-2,)).append("DETECTOR", (-1,))
    a = frame_sample(c, None, 20000, seed=3)
    bits = a.detector_bits()
    rate = bits.mean(axis=0)
    assert abs(rate[0] - 0.2) < 5 * np.sqrt(0.2 * 0.8 / 20000)
    assert (bits[:, 0] == bits[:, 1]).all()
    b = frame_sample(c, None, 20000, seed=3)
    assert (a.detectors == b.detectors).all()
    assert (frame_sample(c, 0.0, 500, seed=1).detector_bits() == 0).all()


def test_fault_path_rules(code):
    c = with_noise(synth_logical(code, GateSpec("H", (0,), "bare")).circuit, 1e-3)
    site = c.fault_sites()[0]
    f1, f2 = (ElementaryFault(site, t) for t in site_terms(site)[:2])
    assert not FaultPath((f1, f2)).distinct_locations
    with pytest.raises(ValueError):
        FaultPath((f1, f1))
