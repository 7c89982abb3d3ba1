"""Stochastic Pauli-trajectory noise on decomposed circuits.

Each trajectory is a pure-state run in which, after every physical gate,
errors are inserted at random according to the model:

* two-qubit gates (CX/CZ): optional coherent exp(-i eps Z(x)Z) overrotation, then
  with probability ``two_qubit_depolarizing`` one of the 15 non-identity
  two-qubit Paulis, uniformly;
* single-qubit gates: with probability ``single_qubit_depolarizing`` one of
  X, Y, Z, uniformly;
* readout: each measured bit flips 0->1 with p(1|0) and 1->0 with p(0|1).

Shots are split evenly across trajectories and sampled from each final state.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import _kernels
from . import circuit as C
from .circuit import Circuit
from .seeding import rng_for
from .statevector import (
    Statevector,
    _apply_1q,
    apply_gate_inplace,
    marginal_probabilities,
    probabilities_to_dict,
    run_circuit,
)

_PAULI_1Q = [C.PAULI_MATRICES[k] for k in "XYZ"]
_PAULI_ALL = [C.PAULI_MATRICES[k] for k in "IXYZ"]


@dataclass(frozen=True)
class NoiseModel:
    two_qubit_depolarizing: float = 0.0
    single_qubit_depolarizing: float = 0.0
    # (p(1|0), p(0|1)) for every qubit, or one pair per qubit
    readout_flip: tuple = (0.0, 0.0)
    coherent_overrotation: float = 0.0

    def __post_init__(self):
        for name in ("two_qubit_depolarizing", "single_qubit_depolarizing"):
            p = getattr(self, name)
            if not 0 <= p < 1:
                raise ValueError(f"{name} must lie in [0, 1), got {p}")
        flips = self.readout_flip
        if len(flips) == 2 and all(isinstance(v, (int, float)) for v in flips):
            pairs = [tuple(float(v) for v in flips)]
            object.__setattr__(self, "readout_flip", tuple(pairs[0]))
        else:
            pairs = [tuple(float(v) for v in pair) for pair in flips]
            object.__setattr__(self, "readout_flip", tuple(pairs))
        for pair in pairs:
            if len(pair) != 2 or not all(0 <= v < 1 for v in pair):
                raise ValueError(f"readout flip probabilities must be pairs in [0, 1), got {pair}")
        if abs(self.coherent_overrotation) >= math.pi / 4:
            raise ValueError(f"|coherent_overrotation| must be below pi/4, got {self.coherent_overrotation}")

    @property
    def per_qubit_readout(self) -> bool:
        return not isinstance(self.readout_flip[0], float)

    def flip_probs(self, qubit: int) -> tuple[float, float]:
        if self.per_qubit_readout:
            return self.readout_flip[qubit]
        return self.readout_flip

    def readout_for(self, qubits: Sequence[int]) -> list[tuple[float, float]]:
        return [self.flip_probs(q) for q in qubits]

    @property
    def has_gate_noise(self) -> bool:
        return bool(self.two_qubit_depolarizing or self.single_qubit_depolarizing or self.coherent_overrotation)

    @property
    def has_readout_noise(self) -> bool:
        pairs = self.readout_flip if self.per_qubit_readout else [self.readout_flip]
        return any(a or b for a, b in pairs)

    @property
    def is_noiseless(self) -> bool:
        return not (self.has_gate_noise or self.has_readout_noise)

    def label(self) -> str:
        if self.is_noiseless:
            return "none"
        parts = []
        if self.two_qubit_depolarizing:
            parts.append(f"p2={self.two_qubit_depolarizing:g}")
        if self.single_qubit_depolarizing:
            parts.append(f"p1={self.single_qubit_depolarizing:g}")
        if self.coherent_overrotation:
            parts.append(f"eps={self.coherent_overrotation:g}")
        if self.has_readout_noise:
            parts.append("readout")
        return ";".join(parts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["readout_flip"] = [list(p) for p in self.readout_flip] if self.per_qubit_readout else list(self.readout_flip)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> NoiseModel:
        d = dict(data)
        if "readout_flip" in d:
            rf = d["readout_flip"]
            d["readout_flip"] = tuple(tuple(p) for p in rf) if rf and isinstance(rf[0], (list, tuple)) else tuple(rf)
        return cls(**d)


@lru_cache(maxsize=1024)
def _zz_phases(n: int, a: int, b: int, eps: float) -> np.ndarray:
    """Diagonal of exp(-i eps Z_a Z_b) in the big-endian basis."""
    idx = np.arange(1 << n)
    za = (idx >> (n - 1 - a)) & 1
    zb = (idx >> (n - 1 - b)) & 1
    parity = 1 - 2 * (za ^ zb)
    out = np.exp(-1j * eps * parity)
    out.setflags(write=False)
    return out


def _apply_pauli_index(psi: np.ndarray, n: int, k: int, q: int) -> None:
    """k in 0..3 selects I, X, Y, Z on qubit q."""
    if k:
        _apply_1q(psi, n, _PAULI_ALL[k], q)


@dataclass(frozen=True)
class NoiseDraws:
    """Randomness for one trajectory: trigger per gate and which Pauli to insert."""

    u: np.ndarray
    k2: np.ndarray
    k1: np.ndarray

    @classmethod
    def sample(cls, n_gates: int, rng: np.random.Generator) -> NoiseDraws:
        return cls(rng.random(n_gates), rng.integers(1, 16, n_gates), rng.integers(1, 4, n_gates))


def noisy_trajectory_reference(circuit: Circuit, model: NoiseModel, draws: NoiseDraws) -> Statevector:
    """Plain numpy trajectory; kept as the check on the compiled kernel."""
    n = circuit.n_qubits
    state = Statevector.zero(n)
    psi = state.amplitudes
    gates = [g for g in circuit.gates if g.kind != C.MEASURE]
    p2, p1, eps = model.two_qubit_depolarizing, model.single_qubit_depolarizing, model.coherent_overrotation
    for i, g in enumerate(gates):
        apply_gate_inplace(psi, n, g)
        if g.arity == 2:
            a, b = g.qubits
            if eps:
                psi *= _zz_phases(n, a, b, eps)
            if draws.u[i] < p2:
                _apply_pauli_index(psi, n, int(draws.k2[i]) >> 2, a)
                _apply_pauli_index(psi, n, int(draws.k2[i]) & 3, b)
        elif g.arity == 1 and draws.u[i] < p1:
            _apply_pauli_index(psi, n, int(draws.k1[i]), g.qubits[0])
    return state


class TrajectoryRunner:
    """Lowers a decomposed circuit once and runs many compiled trajectories."""

    def __init__(self, circuit: Circuit, model: NoiseModel):
        _check_decomposed(circuit)
        self.circuit = circuit
        self.model = model
        self.ops, self.qubits, self.mats = _kernels.lower(circuit)

    def run(self, rng: np.random.Generator) -> Statevector:
        draws = NoiseDraws.sample(self.ops.size, rng)
        return self.run_draws(draws)

    def run_draws(self, draws: NoiseDraws) -> Statevector:
        n = self.circuit.n_qubits
        state = Statevector.zero(n)
        m = self.model
        _kernels.run_trajectory(
            state.amplitudes, n, self.ops, self.qubits, self.mats, _kernels._PAULIS,
            draws.u, draws.k2, draws.k1,
            m.two_qubit_depolarizing, m.single_qubit_depolarizing, m.coherent_overrotation,
        )
        return state


def noisy_trajectory(circuit: Circuit, model: NoiseModel, rng: np.random.Generator) -> Statevector:
    """Final state of one stochastic trajectory (measurements ignored)."""
    return TrajectoryRunner(circuit, model).run(rng)


def _check_decomposed(circuit: Circuit) -> None:
    bad = {g.kind for g in circuit.gates if g.kind in (C.PAULI_ROTATION, C.CSWAP)}
    if bad:
        raise ValueError(f"noise attaches to physical gates; decompose {sorted(bad)} first")


def _readout_targets(circuit: Circuit) -> tuple[int, ...]:
    return circuit.measured_qubits or tuple(range(circuit.n_qubits))


def confusion_matrix(p10: float, p01: float) -> np.ndarray:
    """A[observed, true] for one bit."""
    return np.array([[1 - p10, p01], [p10, 1 - p01]])


def apply_confusion(probs: np.ndarray, flips: Sequence[tuple[float, float]]) -> np.ndarray:
    """Push a distribution over len(flips) bits (first bit = MSB) through readout noise."""
    width = len(flips)
    t = np.asarray(probs, dtype=float).reshape((2,) * width)
    for k, (p10, p01) in enumerate(flips):
        t = np.moveaxis(np.tensordot(confusion_matrix(p10, p01), t, axes=([1], [k])), 0, k)
    return t.reshape(-1)


def _flip_bits(outcomes: np.ndarray, flips: Sequence[tuple[float, float]], rng: np.random.Generator) -> np.ndarray:
    width = len(flips)
    u = rng.random((outcomes.size, width))
    out = outcomes.copy()
    for k, (p10, p01) in enumerate(flips):
        shift = width - 1 - k
        bit = (outcomes >> shift) & 1
        flip = np.where(bit == 0, u[:, k] < p10, u[:, k] < p01)
        out ^= flip.astype(outcomes.dtype) << shift
    return out


def _split(shots: int, parts: int) -> list[int]:
    base, extra = divmod(shots, parts)
    return [base + (i < extra) for i in range(parts)]


def apply_noise(circuit: Circuit, model: NoiseModel, shots: int, seed, trajectories: int | None = 64) -> dict[str, int]:
    """Sampled noisy execution of a decomposed circuit.

    ``trajectories=None`` runs one trajectory per shot. A model with every
    probability at zero reproduces ``run_circuit`` for the same seed exactly.
    """
    _check_decomposed(circuit)
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    if model.is_noiseless:
        return run_circuit(circuit, shots, seed)
    targets = _readout_targets(circuit)
    width = len(targets)
    flips = model.readout_for(targets)
    n_traj = shots if trajectories is None else max(1, min(trajectories, shots))
    if not model.has_gate_noise:
        n_traj = 1
    seed = int(seed)
    runner = TrajectoryRunner(circuit, model)
    outcomes = []
    for k, m in enumerate(_split(shots, n_traj)):
        if not m:
            continue
        state = runner.run(rng_for(seed, "trajectory", k))
        probs = marginal_probabilities(state.amplitudes, state.n_qubits, targets)
        probs = np.clip(probs, 0, None)
        rng = rng_for(seed, "shots", k)
        outcomes.append(rng.choice(probs.size, size=m, p=probs / probs.sum()))
    sample = np.concatenate(outcomes)
    if model.has_readout_noise:
        sample = _flip_bits(sample, flips, rng_for(seed, "readout"))
    values, counts = np.unique(sample, return_counts=True)
    return {format(int(v), f"0{width}b"): int(c) for v, c in zip(values, counts)}


def noisy_probabilities(circuit: Circuit, model: NoiseModel, trajectories: int = 256, seed: int = 0) -> dict[str, float]:
    """Trajectory-averaged outcome distribution with readout noise applied exactly."""
    _check_decomposed(circuit)
    targets = _readout_targets(circuit)
    n_traj = trajectories if model.has_gate_noise else 1
    acc = np.zeros(2 ** len(targets))
    runner = TrajectoryRunner(circuit, model)
    for k in range(n_traj):
        state = runner.run(rng_for(seed, "trajectory", k))
        acc += marginal_probabilities(state.amplitudes, state.n_qubits, targets)
    acc /= n_traj
    if model.has_readout_noise:
        acc = apply_confusion(acc, model.readout_for(targets))
    return probabilities_to_dict(acc, len(targets))

