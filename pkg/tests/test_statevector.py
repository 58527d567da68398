import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcsft import gates
from lcsft.pauli import PauliOperator
from lcsft.statevector import (StateVector, codespace_basis, equal_up_to_phase, expectation, logical_fidelity,
                               logical_unitary)
from lcsft.synth import GateSpec, synth_logical

KINDS = sorted(gates.UNITARIES)


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return StateVector(n, v / np.linalg.norm(v))


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(KINDS), st.permutations(range(4)), st.integers(0, 2 ** 31))
def test_apply_matches_dense_matrix(kind, perm, seed):
    qs = perm[:gates.arity(kind)]
    a = random_state(4, seed)
    b = a.copy()
    a.apply(kind, qs)
    b.apply_matrix(gates.UNITARIES[kind], qs)
    assert np.allclose(a.vector(), b.vector())


@settings(max_examples=60, deadline=None)
@given(st.text(alphabet="IXYZ", min_size=4, max_size=4), st.integers(0, 3), st.integers(0, 2 ** 31))
def test_pauli_action_matches_kron(letters, phase, seed):
    p = PauliOperator.from_letters(letters, phase)
    s = random_state(4, seed)
    v = s.vector().copy()
    s.apply_pauli(p)
    assert np.allclose(s.vector(), p.to_matrix() @ v)
    herm = p.with_phase(0 if phase % 2 == 0 else phase - 1)
    assert np.isclose(expectation(random_state(4, seed), herm),
                      np.vdot(v, herm.to_matrix() @ v).real)


def test_measure_pauli_projects():
    rng = np.random.default_rng(5)
    p = PauliOperator.from_letters("XZY")
    counts = 0
    for _ in range(400):
        s = random_state(3, 11)
        bit = s.measure_pauli(p, rng)
        counts += bit
        assert np.isclose(expectation(s, p), 1 - 2 * bit)
        assert np.isclose(s.norm, 1)
    p_minus = (1 - expectation(random_state(3, 11), p)) / 2
    assert abs(counts / 400 - p_minus) < 5 * np.sqrt(p_minus * (1 - p_minus) / 400) + 1e-9


def test_codespace_basis(code):
    b = codespace_basis(code)
    assert np.allclose(b.conj().T @ b, np.eye(8))
    for g in code.generators:
        for j in range(8):
            s = StateVector(15, b[:, j].copy())
            assert np.isclose(expectation(s, g), 1)
    s = StateVector(15, b[:, 0].copy())
    assert np.isclose(expectation(s, code.logical_z[2]), 1)


@pytest.mark.parametrize("kind", ["H", "S"])
def test_logical_unitary_of_clifford(code, kind):
    u = logical_unitary(code, synth_logical(code, GateSpec(kind, (1,), "bare")).circuit)
    g = gates.UNITARIES[kind]
    want = np.kron(np.eye(2), np.kron(g, np.eye(2)))   # logical 2 is the most significant index bit
    assert equal_up_to_phase(u, want, atol=1e-8)


def test_magic_fidelity(code):
    b = codespace_basis(code)
    for i in range(3):
        v = np.cos(np.pi / 8) * b[:, 0] + np.sin(np.pi / 8) * b[:, 1 << i]
        s = StateVector(15, v)
        assert np.isclose(logical_fidelity(s, code, i), 1)
        s.apply_pauli(code.logical_y(i))
        assert np.isclose(logical_fidelity(s, code, i), 0)
