from __future__ import annotations

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import I2, X, Y, Z, kron_all
from sykent.syk import SykHamiltonian, SykParams, build_hamiltonian, sample_couplings


def jw_dense(index: int, n: int) -> np.ndarray:
    site = (index - 1) // 2
    last = X if index % 2 else Y
    return kron_all(Z if k < site else (last if k == site else I2) for k in range(n))


def dense_syk(params: SykParams) -> np.ndarray:
    n = params.n_qubits
    h = np.zeros((2**n, 2**n), dtype=complex)
    for idx, j in sample_couplings(params).items():
        prod = np.eye(2**n, dtype=complex)
        for k in idx:
            prod = prod @ jw_dense(k, n)
        h += (1j ** (params.q // 2)) * j * prod
    return h


def test_variance_formula():
    p = SykParams(6, 4, 1.0)
    assert p.coupling_variance == pytest.approx(1 / 36)
    assert math.sqrt(p.coupling_variance) == pytest.approx(1 / 6)


def test_fifteen_couplings_in_lexicographic_order():
    couplings = sample_couplings(SykParams())
    assert list(couplings) == list(combinations(range(1, 7), 4))
    assert len(couplings) == 15


def test_couplings_deterministic_per_seed():
    assert sample_couplings(SykParams(seed=7)) == sample_couplings(SykParams(seed=7))
    assert sample_couplings(SykParams(seed=7)) != sample_couplings(SykParams(seed=8))


def test_coupling_variance_empirical():
    draws = np.concatenate([list(sample_couplings(SykParams(seed=s)).values()) for s in range(400)])
    # 6000 normal draws: sample variance within ~5 standard errors
    assert draws.var() == pytest.approx(1 / 36, rel=5 * math.sqrt(2 / draws.size))
    assert abs(draws.mean()) < 5 / 6 / math.sqrt(draws.size)


def test_first_term_is_zz():
    h = build_hamiltonian(SykParams(seed=3))
    j = sample_couplings(SykParams(seed=3))[(1, 2, 3, 4)]
    coeff, p = h.terms[0]
    assert p.label() == "+ZZI"
    assert coeff == pytest.approx(j)


def test_term_supports():
    h = build_hamiltonian(SykParams())
    assert len(h) == 15
    assert all(p.weight in (2, 3) for _, p in h.terms)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([(4, 2), (6, 2), (6, 4), (8, 4), (8, 6)]))
def test_matches_dense_jordan_wigner(seed, shape):
    params = SykParams(shape[0], shape[1], 1.0, seed)
    h = build_hamiltonian(params)
    m = h.to_matrix()
    np.testing.assert_allclose(m, dense_syk(params), atol=1e-12)
    np.testing.assert_allclose(m, m.conj().T, atol=1e-14)
    assert abs(np.trace(m)) < 1e-12


def test_json_round_trip(tmp_path):
    h = build_hamiltonian(SykParams(seed=11, j_scale=1.7))
    path = tmp_path / "h.json"
    h.save(path)
    back = SykHamiltonian.load(path)
    assert back == h
    assert all(a == b for (a, _), (b, _) in zip(back.terms, h.terms))


@pytest.mark.parametrize(
    "kwargs", [dict(n_majorana=5), dict(q=3), dict(q=8), dict(j_scale=0.0), dict(seed=-1)]
)
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        SykParams(**kwargs)
