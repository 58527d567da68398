import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcsft.code import CodeError, PauliClass, dump_check_file, from_check_matrices, load_check_file
from lcsft.pauli import PauliOperator, multiply


def test_parameters(code):
    assert (code.n, code.k, code.rank) == (15, 3, 12)
    assert [g.weight for g in code.generators] == [4, 4, 4, 5, 5, 5] * 2
    assert code.min_weight_logical(3) == 3
    assert [lg.support for lg in code.logical_x] == [[0, 10, 12], [1, 11, 13], [2, 9, 14]]


def test_logical_y_sign(code):
    # Y_0 = i X_0 Z_0 is -Y0*Y10*Y12 as a Pauli string
    assert str(code.logical_y(0)) == "-Y0*Y10*Y12"


def test_classify(code):
    assert code.classify(PauliOperator.identity(15)) is PauliClass.IDENTITY
    assert code.classify(code.generators[3]) is PauliClass.STABILIZER
    assert code.classify(code.logical_x[1]) is PauliClass.LOGICAL
    assert code.classify(PauliOperator.single(15, 4, "Y")) is PauliClass.DETECTABLE


def test_every_single_qubit_error_has_a_distinct_syndrome_class(code):
    # distance 3: single-qubit errors with equal syndromes are stabilizer-equivalent
    seen = {}
    for q in range(15):
        for letter in "XYZ":
            e = PauliOperator.single(15, q, letter)
            s = code.syndrome_int(e.x, e.z)
            assert s != 0
            if s in seen:
                assert code.is_stabilizer_equivalent(seen[s], e)
            seen[s] = e


@settings(max_examples=60)
@given(st.lists(st.integers(0, 11), max_size=6), st.integers(0, 5))
def test_stabilizer_products_have_sign_plus(code, idx, logical):
    acc = PauliOperator.identity(15)
    for i in idx:
        acc = multiply(acc, code.generators[i])
    assert code.stabilizer_sign(acc) == 1
    assert code.stabilizer_sign(acc.with_phase(acc.phase + 2)) == -1
    lg = code.logicals[logical]
    assert code.stabilizer_sign(multiply(acc, lg)) is None
    assert code.is_stabilizer_equivalent(lg, multiply(acc, lg))


def test_check_file_roundtrip(code, tmp_path):
    path = tmp_path / "lcs.txt"
    dump_check_file(code, path)
    back = load_check_file(path)
    assert back.n == 15 and back.k == 3
    assert back.generators == code.generators
    assert back.logical_x == code.logical_x


def test_css_logicals_inferred():
    # Steane code: k = 1, inferred logicals must be valid (checked in the constructor)
    h = np.array([[1, 0, 1, 0, 1, 0, 1], [0, 1, 1, 0, 0, 1, 1], [0, 0, 0, 1, 1, 1, 1]])
    c = from_check_matrices(h, h)
    assert c.k == 1 and c.min_weight_logical(3) == 3


def test_rejects_noncommuting_checks():
    with pytest.raises(CodeError):
        from_check_matrices([[1, 1, 0]], [[1, 0, 0]])


def test_bad_file(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("HX\n10a\n")
    with pytest.raises(CodeError):
        load_check_file(p)
