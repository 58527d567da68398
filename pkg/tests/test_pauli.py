import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcsft.pauli import PauliOperator, commutes, multiply, product



def paulis(n):
    return st.builds(lambda s, ph: PauliOperator.from_letters(s, ph),
                     st.text(alphabet="IXYZ", min_size=n, max_size=n), st.integers(0, 3))


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(paulis(n), paulis(n))))
def test_product_matches_matrices(pq):
    p, q = pq
    assert np.allclose(multiply(p, q).to_matrix(), p.to_matrix() @ q.to_matrix())


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(paulis(n), paulis(n))))
def test_commutation_matches_matrices(pq):
    p, q = pq
    a, b = p.to_matrix(), q.to_matrix()
    anti = not np.allclose(a @ b, b @ a)
    assert commutes(p, q) == int(anti)
    assert commutes(q, p) == commutes(p, q)


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(paulis(n), paulis(n), paulis(n))))
def test_associative(pqr):
    p, q, r = pqr
    assert (p * q) * r == p * (q * r)


@given(paulis(5))
def test_inverse_and_text_roundtrip(p):
    assert (p * p.inverse()).is_identity and (p * p.inverse()).phase == 0
    assert PauliOperator.parse(str(p), p.n) == p


def test_y_letter_is_hermitian_y():
    y = PauliOperator.from_letters("Y")
    assert np.allclose(y.to_matrix(), [[0, -1j], [1j, 0]])
    assert multiply(PauliOperator.from_letters("X"), PauliOperator.from_letters("Z")) == y.with_phase(3)


def test_parse_and_weight():
    p = PauliOperator.parse("-X0*Y10*Z12", 15)
    assert p.weight == 3 and p.support == [0, 10, 12] and p.phase == 2
    assert str(p) == "-X0*Y10*Z12"
    with pytest.raises(ValueError):
        PauliOperator.parse("X0*X0", 3)
    with pytest.raises(ValueError):
        PauliOperator.parse("Q1", 3)


def test_embed_restrict():
    p = PauliOperator.from_letters("XZ")
    e = p.embed(4, [1, 3])
    assert e.letters() == "IXIZ"
    assert e.restrict([1, 3]) == p


def test_product_identity():
    assert product([], 3).is_identity


@settings(max_examples=50)
@given(paulis(3))
def test_unsigned(p):
    assert p.unsigned().phase == 0 and p.unsigned().x == p.x
