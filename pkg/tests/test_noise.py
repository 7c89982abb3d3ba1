from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import noisy_density_matrix
from sykent import circuit as C
from sykent.circuit import Circuit
from sykent.noise import (
    NoiseDraws,
    NoiseModel,
    TrajectoryRunner,
    apply_confusion,
    apply_noise,
    noisy_probabilities,
    noisy_trajectory_reference,
)
from sykent.statevector import run_circuit
from sykent.syk import SykParams, build_hamiltonian
from sykent.trotter import TrotterPlan, build_trotter_circuit, decompose
from test_circuit import circuits

BELL = Circuit(2, (C.h(0), C.cx(0, 1))).measure([0, 1])


def physical(circ: Circuit) -> Circuit:
    return decompose(circ)


def syk_physical(seed=0, t=2.0, r=1):
    return build_trotter_circuit(TrotterPlan(build_hamiltonian(SykParams(seed=seed)), t, r), decomposed=True)


def test_noiseless_model_is_bit_exact():
    circ = syk_physical(1).measure([0, 1, 2])
    assert apply_noise(circ, NoiseModel(), 4000, 11) == run_circuit(circ, 4000, 11)


def test_readout_flip_binomial():
    model = NoiseModel(readout_flip=(0.1, 0.0))
    shots = 100_000
    counts = apply_noise(Circuit(1).measure([0]), model, shots, 3)
    ones = counts.get("1", 0)
    assert abs(ones - 0.1 * shots) < 3 * math.sqrt(shots * 0.1 * 0.9)


def test_readout_asymmetric_per_qubit():
    model = NoiseModel(readout_flip=((0.0, 0.0), (0.0, 0.2)))
    circ = Circuit(2, (C.pauli_gate("X", 0), C.pauli_gate("X", 1))).measure([0, 1])
    counts = apply_noise(circ, model, 50_000, 1)
    assert set(counts) <= {"11", "10"}
    assert counts["10"] / 50_000 == pytest.approx(0.2, abs=0.01)


@settings(max_examples=30, deadline=None)
@given(circuits(max_qubits=4, max_gates=14), st.integers(0, 2**32),
       st.floats(0, 0.5), st.floats(0, 0.5), st.floats(-0.5, 0.5))
def test_kernel_matches_reference(circ, seed, p2, p1, eps):
    circ = physical(circ)
    model = NoiseModel(p2, p1, coherent_overrotation=eps)
    runner = TrajectoryRunner(circ, model)
    draws = NoiseDraws.sample(runner.ops.size, np.random.default_rng(seed))
    np.testing.assert_allclose(
        runner.run_draws(draws).amplitudes, noisy_trajectory_reference(circ, model, draws).amplitudes, atol=1e-10
    )


@pytest.mark.parametrize(
    "model",
    [NoiseModel(0.2), NoiseModel(0.0, 0.3), NoiseModel(0.0, 0.0, coherent_overrotation=0.3),
     NoiseModel(0.1, 0.05, coherent_overrotation=0.1)],
)
def test_trajectory_average_matches_channel(model):
    circ = Circuit(3, (C.h(0), C.cx(0, 1), C.rz(0.7, 1), C.cx(1, 2), C.h(2), C.cz(0, 2)))
    rho = noisy_density_matrix(circ, model.two_qubit_depolarizing, model.single_qubit_depolarizing,
                               model.coherent_overrotation)
    expected = np.diag(rho).real
    n_traj = 4000
    got = noisy_probabilities(circ, model, trajectories=n_traj, seed=2)
    got = np.array([got.get(format(i, "03b"), 0.0) for i in range(8)])
    # per-outcome trajectory variance is at most p(1-p)
    tol = 5 * np.sqrt(expected * (1 - expected) / n_traj) + 1e-9
    assert np.all(np.abs(got - expected) <= tol)


def test_depolarizing_decay_monotone_in_gate_count():
    model = NoiseModel(0.02)
    survival = []
    for g in (2, 10, 40, 120):
        circ = Circuit(2, tuple(C.cx(0, 1) for _ in range(g)))
        survival.append(noisy_probabilities(circ, model, trajectories=2000, seed=0).get("00", 0.0))
        exact = np.diag(noisy_density_matrix(circ, p2=0.02)).real[0]
        assert survival[-1] == pytest.approx(exact, abs=0.04)
    assert all(a > b for a, b in zip(survival, survival[1:]))


def test_coherent_kick_alone_is_deterministic():
    model = NoiseModel(coherent_overrotation=0.2)
    circ = syk_physical(0)
    a = noisy_probabilities(circ, model, trajectories=3, seed=1)
    b = noisy_probabilities(circ, model, trajectories=1, seed=9)
    assert a == pytest.approx(b)


def test_apply_confusion_matches_kron():
    flips = [(0.1, 0.2), (0.05, 0.3)]
    probs = np.array([0.4, 0.1, 0.2, 0.3])
    a = np.kron(*[np.array([[1 - p, q], [p, 1 - q]]) for p, q in flips])
    np.testing.assert_allclose(apply_confusion(probs, flips), a @ probs)


def test_apply_noise_deterministic_and_seed_sensitive():
    model = NoiseModel(0.05, 0.01, readout_flip=(0.02, 0.03))
    circ = syk_physical(2).measure([0, 1])
    assert apply_noise(circ, model, 3000, 4) == apply_noise(circ, model, 3000, 4)
    assert apply_noise(circ, model, 3000, 4) != apply_noise(circ, model, 3000, 5)
    assert sum(apply_noise(circ, model, 3001, 4, trajectories=None).values()) == 3001


def test_noise_requires_decomposed_circuit():
    circ = build_trotter_circuit(TrotterPlan(build_hamiltonian(SykParams()), 1.0, 1))
    with pytest.raises(ValueError):
        apply_noise(circ, NoiseModel(0.01), 10, 0)


@pytest.mark.parametrize(
    "kwargs",
    [dict(two_qubit_depolarizing=1.0), dict(single_qubit_depolarizing=-0.1), dict(readout_flip=(0.5, 1.0)),
     dict(coherent_overrotation=1.0), dict(readout_flip=((0.1,),))],
)
def test_invalid_models(kwargs):
    with pytest.raises(ValueError):
        NoiseModel(**kwargs)


@pytest.mark.parametrize(
    "model",
    [NoiseModel(), NoiseModel(0.01, 0.001, (0.02, 0.03), 0.02), NoiseModel(readout_flip=((0.1, 0.2), (0.0, 0.05)))],
)
def test_model_dict_round_trip(model):
    assert NoiseModel.from_dict(model.to_dict()) == model


def test_labels():
    assert NoiseModel().label() == "none"
    assert NoiseModel(0.005, coherent_overrotation=0.02).label() == "p2=0.005;eps=0.02"
