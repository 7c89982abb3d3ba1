"""Pauli strings in symplectic form.

An n-qubit Pauli operator is stored as two bitmasks plus a phase exponent:

    P = i**phase * sigma(x_0, z_0) (x) sigma(x_1, z_1) (x) ... (x) sigma(x_{n-1}, z_{n-1})

with sigma(0,0)=I, sigma(1,0)=X, sigma(0,1)=Z and sigma(1,1)=Y (the Hermitian Y,
not XZ). Bit ``q`` of ``x_bits``/``z_bits`` refers to qubit ``q``. Qubit 0 is the
leftmost tensor factor and the leftmost character of the text form, so
``to_matrix`` follows ``np.kron`` ordering.

Majorana indices follow the usual 1-based physics convention; everything else
is 0-based.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce

import numpy as np

_LABELS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _LABELS.items()}
_PHASE_TEXT = ("+", "+i", "-", "-i")
_TEXT_RE = re.compile(r"^([+-]?)(i?)([IXYZ]+)$")

_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_bits: int = 0
    z_bits: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        limit = 1 << self.n_qubits
        if not (0 <= self.x_bits < limit and 0 <= self.z_bits < limit):
            raise ValueError("bitmasks use bits outside the qubit range")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def from_label(cls, label: str) -> PauliString:
        """Parse ``"+XYZ"``, ``"-iZZI"``, ``"XI"``; leftmost character is qubit 0."""
        m = _TEXT_RE.match(label.strip())
        if m is None:
            raise ValueError(f"not a Pauli string: {label!r}")
        sign, imag, ops = m.groups()
        phase = (2 if sign == "-" else 0) + (1 if imag else 0)
        x = z = 0
        for q, ch in enumerate(ops):
            xb, zb = _BITS[ch]
            x |= xb << q
            z |= zb << q
        return cls(len(ops), x, z, phase)

    def label(self) -> str:
        """Text form, always carrying an explicit sign."""
        ops = "".join(_LABELS[self.x_at(q), self.z_at(q)] for q in range(self.n_qubits))
        return _PHASE_TEXT[self.phase] + ops

    def __str__(self) -> str:
        return self.label()

    def x_at(self, q: int) -> int:
        return (self.x_bits >> q) & 1

    def z_at(self, q: int) -> int:
        return (self.z_bits >> q) & 1

    @property
    def weight(self) -> int:
        return _popcount(self.x_bits | self.z_bits)

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x_bits | self.z_bits
        return tuple(q for q in range(self.n_qubits) if (mask >> q) & 1)

    def is_identity(self) -> bool:
        return self.x_bits == 0 and self.z_bits == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def without_phase(self) -> PauliString:
        return PauliString(self.n_qubits, self.x_bits, self.z_bits, 0)

    def with_phase(self, phase: int) -> PauliString:
        return PauliString(self.n_qubits, self.x_bits, self.z_bits, phase)

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def to_matrix(self) -> np.ndarray:
        ops = [_MATRICES[_LABELS[self.x_at(q), self.z_at(q)]] for q in range(self.n_qubits)]
        return (1j**self.phase) * reduce(np.kron, ops)


def _check_same_size(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Operator product ``a @ b`` with exact phase bookkeeping.

    Writing each factor as i**(x.z) X**x Z**z, the product picks up
    (-1)**(z_a . x_b) from moving Z_a past X_b, and the i**(x.z) prefactors are
    re-balanced for the result.
    """
    _check_same_size(a, b)
    x = a.x_bits ^ b.x_bits
    z = a.z_bits ^ b.z_bits
    phase = (
        a.phase
        + b.phase
        + _popcount(a.x_bits & a.z_bits)
        + _popcount(b.x_bits & b.z_bits)
        + 2 * _popcount(a.z_bits & b.x_bits)
        - _popcount(x & z)
    )
    return PauliString(a.n_qubits, x, z, phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_same_size(a, b)
    sym = _popcount(a.x_bits & b.z_bits) + _popcount(a.z_bits & b.x_bits)
    return sym % 2 == 0


def majorana_to_pauli(index: int, n_qubits: int) -> PauliString:
    """Jordan-Wigner image of Majorana operator ``index`` (1-based).

    Index 2i-1 maps to Z...Z X on qubit i-1 and index 2i to Z...Z Y on qubit
    i-1 (0-based qubits). Images square to the identity.
    """
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be positive, got {n_qubits}")
    if index < 1:
        raise ValueError(f"Majorana index is 1-based, got {index}")
    if index > 2 * n_qubits:
        raise ValueError(f"Majorana index {index} exceeds 2*n_qubits={2 * n_qubits}")
    site = (index - 1) // 2
    chain = (1 << site) - 1
    x = 1 << site
    z = chain | (x if index % 2 == 0 else 0)
    return PauliString(n_qubits, x, z, 0)
