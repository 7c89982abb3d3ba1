from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import pauli_dense
from sykent.pauli import PauliString, commutes, majorana_to_pauli, multiply

labels = st.integers(1, 5).flatmap(
    lambda n: st.tuples(
        st.sampled_from(["+", "-", "+i", "-i"]),
        st.text(alphabet="IXYZ", min_size=n, max_size=n),
    )
).map(lambda t: t[0] + t[1])


def pair_of_labels():
    return st.integers(1, 4).flatmap(
        lambda n: st.tuples(
            st.text(alphabet="IXYZ", min_size=n, max_size=n),
            st.text(alphabet="IXYZ", min_size=n, max_size=n),
        )
    )


@pytest.mark.parametrize(
    "index, expected",
    [(1, "+XII"), (2, "+YII"), (3, "+ZXI"), (4, "+ZYI"), (5, "+ZZX"), (6, "+ZZY")],
)
def test_majorana_images(index, expected):
    assert majorana_to_pauli(index, 3).label() == expected


def test_majorana_clifford_algebra():
    # {chi_a, chi_b} = 2 delta_ab, checked on dense matrices
    n = 3
    mats = [majorana_to_pauli(k, n).to_matrix() for k in range(1, 2 * n + 1)]
    for a, ma in enumerate(mats):
        for b, mb in enumerate(mats):
            anti = ma @ mb + mb @ ma
            expected = 2 * np.eye(2**n) if a == b else np.zeros((2**n, 2**n))
            np.testing.assert_allclose(anti, expected, atol=1e-12)


@pytest.mark.parametrize("index", [0, -1, 7])
def test_majorana_index_out_of_range(index):
    with pytest.raises(ValueError):
        majorana_to_pauli(index, 3)


@pytest.mark.parametrize(
    "a, b, product",
    [("X", "Y", "+iZ"), ("Y", "X", "-iZ"), ("ZX", "ZY", "+iIZ"), ("Z", "Z", "+I"), ("XZ", "ZX", "+YY")],
)
def test_multiply_examples(a, b, product):
    assert multiply(PauliString.from_label(a), PauliString.from_label(b)).label() == product


@given(labels)
def test_square_of_hermitian_is_identity(label):
    p = PauliString.from_label(label)
    if not p.is_hermitian:
        return
    sq = p * p
    assert sq.is_identity and sq.phase == 0


@given(pair_of_labels())
def test_multiply_matches_dense(pair):
    a, b = (PauliString.from_label(s) for s in pair)
    np.testing.assert_allclose((a * b).to_matrix(), pauli_dense(pair[0]) @ pauli_dense(pair[1]), atol=1e-12)


@given(pair_of_labels())
def test_commutes_matches_dense_commutator(pair):
    a, b = (PauliString.from_label(s) for s in pair)
    ma, mb = pauli_dense(pair[0]), pauli_dense(pair[1])
    assert commutes(a, b) == np.allclose(ma @ mb, mb @ ma)


@pytest.mark.parametrize("a, b, expected", [("XI", "IZ", True), ("X", "Z", False), ("XX", "ZZ", True)])
def test_commutes_examples(a, b, expected):
    assert commutes(PauliString.from_label(a), PauliString.from_label(b)) is expected


@given(labels)
def test_label_round_trip(label):
    p = PauliString.from_label(label)
    assert PauliString.from_label(p.label()) == p
    np.testing.assert_allclose(p.to_matrix(), pauli_dense(label), atol=1e-12)


def test_weight_and_support():
    p = PauliString.from_label("XIZY")
    assert p.weight == 3
    assert p.support == (0, 2, 3)


@pytest.mark.parametrize("bad", ["", "XQ", "iiX", "+-X"])
def test_bad_labels(bad):
    with pytest.raises(ValueError):
        PauliString.from_label(bad)


def test_size_mismatch():
    with pytest.raises(ValueError):
        multiply(PauliString.from_label("X"), PauliString.from_label("XX"))
