"""Dense statevector simulation.

Amplitudes are stored big-endian: reshaping to ``[2] * n`` puts qubit ``q`` on
axis ``q``, matching the ``np.kron`` ordering used by ``PauliString.to_matrix``.
Kernels below work in place on a complex128 array; the public functions copy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import circuit as C
from .circuit import Circuit, Gate
from .pauli import PauliString

MAX_QUBITS = 24
_NORM_TOL = 1e-10


@dataclass
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"supported sizes are 1..{MAX_QUBITS} qubits, got {self.n_qubits}")
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got shape {self.amplitudes.shape}")
        norm = np.vdot(self.amplitudes, self.amplitudes).real
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state is not normalised (norm^2 = {norm:.6g})")

    @classmethod
    def zero(cls, n_qubits: int) -> Statevector:
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise ValueError(f"supported sizes are 1..{MAX_QUBITS} qubits, got {n_qubits}")
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_label(cls, bits: str) -> Statevector:
        """Computational basis state, leftmost character is qubit 0."""
        amps = np.zeros(2 ** len(bits), dtype=np.complex128)
        amps[int(bits, 2)] = 1.0
        return cls(len(bits), amps)

    def copy(self) -> Statevector:
        return Statevector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self, targets: Sequence[int] | None = None) -> np.ndarray:
        return marginal_probabilities(self.amplitudes, self.n_qubits, targets)

    def tensor(self, other: Statevector) -> Statevector:
        """self (x) other, with self's qubits first."""
        return Statevector(self.n_qubits + other.n_qubits, np.kron(self.amplitudes, other.amplitudes))


# --- in-place kernels -------------------------------------------------------


def _apply_1q(psi: np.ndarray, n: int, m: np.ndarray, q: int) -> None:
    v = psi.reshape(1 << q, 2, 1 << (n - q - 1))
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = m[0, 0] * a0 + m[0, 1] * a1
    v[:, 1, :] = m[1, 0] * a0 + m[1, 1] * a1


def _index(n: int, fixed: dict[int, int]) -> tuple:
    idx: list = [slice(None)] * n
    for q, b in fixed.items():
        idx[q] = b
    return tuple(idx)


def _apply_cx(psi: np.ndarray, n: int, c: int, t: int) -> None:
    v = psi.reshape((2,) * n)
    i10 = _index(n, {c: 1, t: 0})
    i11 = _index(n, {c: 1, t: 1})
    tmp = v[i10].copy()
    v[i10] = v[i11]
    v[i11] = tmp


def _apply_cz(psi: np.ndarray, n: int, a: int, b: int) -> None:
    v = psi.reshape((2,) * n)
    v[_index(n, {a: 1, b: 1})] *= -1


def _apply_cswap(psi: np.ndarray, n: int, c: int, a: int, b: int) -> None:
    v = psi.reshape((2,) * n)
    i01 = _index(n, {c: 1, a: 0, b: 1})
    i10 = _index(n, {c: 1, a: 1, b: 0})
    tmp = v[i01].copy()
    v[i01] = v[i10]
    v[i10] = tmp


@lru_cache(maxsize=4096)
def _pauli_action(n: int, x_bits: int, z_bits: int, phase: int) -> tuple[np.ndarray, np.ndarray]:
    """(perm, coef) with (P psi)[j] = coef[j] * psi[perm[j]]."""
    # big-endian: qubit q is index bit n-1-q
    xm = sum(1 << (n - 1 - q) for q in range(n) if (x_bits >> q) & 1)
    zm = sum(1 << (n - 1 - q) for q in range(n) if (z_bits >> q) & 1)
    idx = np.arange(1 << n, dtype=np.int64)
    perm = idx ^ xm
    # P|b> = i^(phase + #Y) (-1)^popcount(b & zm) |b ^ xm>, evaluated at b = perm[j]
    n_y = bin(x_bits & z_bits).count("1")
    sign = 1 - 2 * (np.bitwise_count(perm & zm).astype(np.int64) & 1)
    coef = (1j ** ((phase + n_y) % 4)) * sign
    perm.setflags(write=False)
    coef.setflags(write=False)
    return perm, coef


def pauli_apply(psi: np.ndarray, n: int, p: PauliString) -> np.ndarray:
    perm, coef = _pauli_action(n, p.x_bits, p.z_bits, p.phase)
    return coef * psi[perm]


def _apply_pauli_rotation(psi: np.ndarray, n: int, p: PauliString, theta: float) -> None:
    ppsi = pauli_apply(psi, n, p)
    psi *= np.cos(theta)
    psi += (-1j * np.sin(theta)) * ppsi


def apply_gate_inplace(psi: np.ndarray, n: int, g: Gate) -> None:
    kind = g.kind
    if kind == C.UNITARY:
        _apply_1q(psi, n, g.unitary, g.qubits[0])
    elif kind == C.HADAMARD:
        _apply_1q(psi, n, C.H_MATRIX, g.qubits[0])
    elif kind == C.CX:
        _apply_cx(psi, n, *g.qubits)
    elif kind == C.CZ:
        _apply_cz(psi, n, *g.qubits)
    elif kind == C.PAULI_ROTATION:
        _apply_pauli_rotation(psi, n, g.pauli, g.theta)
    elif kind == C.CSWAP:
        _apply_cswap(psi, n, *g.qubits)
    elif kind == C.MEASURE:
        pass
    else:  # pragma: no cover - Gate validates kinds
        raise ValueError(f"unknown gate kind {kind!r}")


# --- public API -------------------------------------------------------------


def _check_gate(state: Statevector, gate: Gate) -> None:
    if any(q >= state.n_qubits for q in gate.qubits):
        raise ValueError(f"{gate.kind} targets {gate.qubits} outside {state.n_qubits} qubits")
    if gate.kind == C.PAULI_ROTATION and gate.pauli.n_qubits != state.n_qubits:
        raise ValueError(f"Pauli width {gate.pauli.n_qubits} != state width {state.n_qubits}")


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    _check_gate(state, gate)
    out = state.copy()
    apply_gate_inplace(out.amplitudes, out.n_qubits, gate)
    return out


def apply_pauli_rotation(state: Statevector, p: PauliString, theta: float) -> Statevector:
    """exp(-i theta P)|psi> = cos(theta)|psi> - i sin(theta) P|psi>."""
    if p.n_qubits != state.n_qubits:
        raise ValueError(f"Pauli width {p.n_qubits} != state width {state.n_qubits}")
    if not p.is_hermitian:
        raise ValueError("rotation generator must be Hermitian")
    out = state.copy()
    _apply_pauli_rotation(out.amplitudes, out.n_qubits, p, theta)
    return out


def simulate(circuit: Circuit, initial: Statevector | None = None) -> Statevector:
    """Apply every non-measurement gate to ``initial`` (default |0...0>)."""
    state = Statevector.zero(circuit.n_qubits) if initial is None else initial.copy()
    if state.n_qubits != circuit.n_qubits:
        raise ValueError("initial state width does not match circuit")
    psi, n = state.amplitudes, state.n_qubits
    for g in circuit.gates:
        apply_gate_inplace(psi, n, g)
    return state


def marginal_probabilities(psi: np.ndarray, n: int, targets: Sequence[int] | None = None) -> np.ndarray:
    """Outcome distribution over ``targets``; index bit order follows ``targets`` (first = MSB)."""
    probs = np.abs(psi) ** 2
    if targets is None:
        return probs
    targets = list(targets)
    if not targets:
        raise ValueError("empty target list")
    if len(set(targets)) != len(targets) or any(not 0 <= q < n for q in targets):
        raise ValueError(f"invalid targets {targets} for {n} qubits")
    t = probs.reshape((2,) * n)
    others = tuple(q for q in range(n) if q not in targets)
    if others:
        t = t.sum(axis=others)
    remaining = sorted(targets)
    t = np.transpose(t, [remaining.index(q) for q in targets])
    return t.reshape(-1)


def probabilities_to_dict(probs: np.ndarray, width: int, cutoff: float = 0.0) -> dict[str, float]:
    return {format(i, f"0{width}b"): float(p) for i, p in enumerate(probs) if p > cutoff}


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def sample_from_probabilities(probs: np.ndarray, width: int, shots: int, rng) -> dict[str, int]:
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    p = np.clip(probs, 0.0, None)
    p = p / p.sum()
    draws = make_rng(rng).multinomial(shots, p)
    return {format(i, f"0{width}b"): int(c) for i, c in enumerate(draws) if c}


def sample_counts(state: Statevector, targets: Sequence[int], shots: int, seed) -> dict[str, int]:
    """Multinomial sample over the marginal of ``targets``; first target is the leftmost bit."""
    targets = list(targets)
    if not targets:
        raise ValueError("empty target list")
    probs = state.probabilities(targets)
    return sample_from_probabilities(probs, len(targets), shots, seed)


def _readout_targets(circuit: Circuit) -> tuple[int, ...]:
    return circuit.measured_qubits or tuple(range(circuit.n_qubits))


def run_circuit(circuit: Circuit, shots: int, seed) -> dict[str, int]:
    """Noiseless run from |0...0>; measures every qubit if the circuit has no measurement."""
    state = simulate(circuit)
    return sample_counts(state, _readout_targets(circuit), shots, seed)


def exact_probabilities(circuit: Circuit) -> dict[str, float]:
    """Outcome distribution of the terminal measurement (shots -> infinity)."""
    targets = _readout_targets(circuit)
    state = simulate(circuit)
    return probabilities_to_dict(state.probabilities(targets), len(targets))
