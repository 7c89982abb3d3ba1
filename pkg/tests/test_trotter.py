from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import circuit_unitary, dense_cswap, expm_hermitian, pauli_dense
from sykent import circuit as C
from sykent.circuit import Circuit
from sykent.pauli import PauliString
from sykent.statevector import simulate
from sykent.syk import SykHamiltonian, SykParams, build_hamiltonian
from sykent.trotter import (
    TrotterPlan,
    build_trotter_circuit,
    count_gates,
    decompose,
    decompose_cswap,
    decompose_pauli_rotation,
    trotter_error,
)


def two_qubit_zz(a: float) -> SykHamiltonian:
    return SykHamiltonian(SykParams(4, 2), ((a, PauliString.from_label("ZZ")),))


def equal_up_to_phase(u, v, atol=1e-10):
    k = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    phase = u[k] / v[k]
    return abs(abs(phase) - 1) < atol and np.allclose(u, phase * v, atol=atol)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.text(alphabet="IXYZ", min_size=n, max_size=n)),
       st.sampled_from("+-"), st.floats(-4, 4))
def test_rotation_decomposition_is_exact(label, sign, theta):
    p = PauliString.from_label(sign + label)
    circ = Circuit(p.n_qubits, tuple(decompose_pauli_rotation(p, theta)))
    expected = expm_hermitian(pauli_dense(sign + label), theta)
    if set(label) == {"I"}:
        assert circ.gates == ()  # pure global phase
        return
    np.testing.assert_allclose(circuit_unitary(circ), expected, atol=1e-10)


def test_decomposed_cswap_matrix():
    for qs in [(0, 1, 2), (2, 0, 1), (1, 2, 0)]:
        u = circuit_unitary(Circuit(3, tuple(decompose_cswap(*qs))))
        assert equal_up_to_phase(u, dense_cswap(*qs, 3))


def test_single_zz_term_layout():
    a, dt = 0.37, 0.5
    circ = build_trotter_circuit(TrotterPlan(two_qubit_zz(a), dt, 1), decomposed=True)
    kinds = [(g.kind, g.qubits) for g in circ.gates]
    assert kinds == [("cx", (0, 1)), ("unitary", (1,)), ("cx", (0, 1))]
    np.testing.assert_allclose(circ.gates[1].unitary, C.rz(2 * a * dt, 1).unitary)


def test_fifteen_native_rotations():
    circ = build_trotter_circuit(TrotterPlan(build_hamiltonian(SykParams()), 2.0, 1))
    assert len(circ) == 15
    assert all(g.kind == C.PAULI_ROTATION for g in circ.gates)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("shape", [(6, 4), (8, 4), (6, 2)])
def test_decomposed_matches_native(seed, shape):
    h = build_hamiltonian(SykParams(*shape, 1.0, seed))
    plan = TrotterPlan(h, 1.3, 2)
    a = simulate(build_trotter_circuit(plan)).amplitudes
    b = simulate(build_trotter_circuit(plan, decomposed=True)).amplitudes
    np.testing.assert_allclose(a, b, atol=1e-9)
    np.testing.assert_allclose(simulate(decompose(build_trotter_circuit(plan))).amplitudes, a, atol=1e-9)


def test_count_examples():
    assert count_gates(Circuit(2)).depth == 0
    single = count_gates(Circuit(2, (C.cx(0, 1),)))
    assert (single.depth, single.two_qubit_gates) == (1, 1)
    zz = count_gates(Circuit(2, tuple(decompose_pauli_rotation(PauliString.from_label("ZZ"), 0.1))))
    assert (zz.two_qubit_gates, zz.depth) == (2, 3)


def test_depth_adds_over_steps():
    h = build_hamiltonian(SykParams(seed=2))
    one = count_gates(build_trotter_circuit(TrotterPlan(h, 2.0, 1), decomposed=True))
    three = count_gates(build_trotter_circuit(TrotterPlan(h, 6.0, 3), decomposed=True))
    assert three.steps == 3
    assert three.depth == 3 * one.depth == 3 * three.per_step_depth
    assert three.two_qubit_gates == 3 * one.two_qubit_gates
    # weights 2 and 3 cost 2 and 4 CX
    expected = sum(2 * (p.weight - 1) for _, p in h.terms)
    assert one.two_qubit_gates == expected


def test_decompose_keeps_step_bounds():
    h = build_hamiltonian(SykParams(seed=2))
    native = build_trotter_circuit(TrotterPlan(h, 4.0, 2))
    assert count_gates(decompose(native)).depth == count_gates(
        build_trotter_circuit(TrotterPlan(h, 4.0, 2), decomposed=True)).depth


def test_convergence():
    h = build_hamiltonian(SykParams(seed=1))
    assert trotter_error(TrotterPlan(h, 2.0, 100)) < trotter_error(TrotterPlan(h, 2.0, 1))


@pytest.mark.parametrize("r", [1, 3, 7])
def test_commuting_hamiltonian_is_exact(r):
    terms = tuple((c, PauliString.from_label(s)) for c, s in [(0.3, "ZZI"), (-0.8, "IZZ"), (0.5, "ZIZ")])
    h = SykHamiltonian(SykParams(6, 4), terms)
    assert trotter_error(TrotterPlan(h, 2.5, r)) < 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_first_order_scaling(seed):
    h = build_hamiltonian(SykParams(seed=seed))
    errs = [trotter_error(TrotterPlan(h, 2.0, r)) for r in (8, 16, 32)]
    for a, b in zip(errs, errs[1:]):
        assert 1.5 <= a / b <= 2.5


def test_term_order_permutation_checked():
    h = build_hamiltonian(SykParams())
    with pytest.raises(ValueError):
        TrotterPlan(h, 1.0, 1, term_order=(0,) * 15)
    with pytest.raises(ValueError):
        TrotterPlan(h, 1.0, 0)
    reordered = TrotterPlan(h, 1.0, 1, term_order=tuple(reversed(range(15))))
    assert build_trotter_circuit(reordered).gates[0].pauli == h.terms[-1][1]


def test_rotation_angle_convention():
    # Rz(2 theta) on the last support qubit implements exp(-i theta Z)
    gates = decompose_pauli_rotation(PauliString.from_label("Z"), 0.25)
    np.testing.assert_allclose(gates[0].unitary, np.diag([np.exp(-0.25j), np.exp(0.25j)]))
    assert math.isclose(np.angle(gates[0].unitary[1, 1]), 0.25)
