"""Gate and circuit containers plus their JSON form."""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .pauli import PauliString

UNITARY = "unitary"
HADAMARD = "h"
CX = "cx"
CZ = "cz"
PAULI_ROTATION = "pauli_rotation"
CSWAP = "cswap"
MEASURE = "measure"

KINDS = (UNITARY, HADAMARD, CX, CZ, PAULI_ROTATION, CSWAP, MEASURE)
TWO_QUBIT_KINDS = (CX, CZ)
_ARITY = {UNITARY: 1, HADAMARD: 1, CX: 2, CZ: 2, CSWAP: 3}

_UNITARY_TOL = 1e-12


@dataclass(frozen=True)
class Gate:
    """One circuit instruction.

    ``matrix`` holds a single-qubit unitary as a row-major 4-tuple so gates stay
    hashable. ``pauli`` and ``theta`` describe exp(-i theta P) rotations.
    """

    kind: str
    qubits: tuple[int, ...]
    matrix: tuple[complex, ...] | None = None
    pauli: PauliString | None = None
    theta: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated target in {self.kind} gate: {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValueError(f"negative qubit index in {self.qubits}")
        arity = _ARITY.get(self.kind)
        if arity is not None and len(self.qubits) != arity:
            raise ValueError(f"{self.kind} acts on {arity} qubit(s), got {self.qubits}")
        if self.kind == UNITARY:
            if self.matrix is None or len(self.matrix) != 4:
                raise ValueError("unitary gate needs a 2x2 matrix")
            if not _is_unitary_2x2(self.matrix):
                raise ValueError(f"matrix for gate {self.label!r} is not unitary")
        if self.kind == PAULI_ROTATION:
            if self.pauli is None:
                raise ValueError("pauli_rotation needs a PauliString")
            if not self.pauli.is_hermitian:
                raise ValueError("rotation generator must be Hermitian (phase +-1)")
            object.__setattr__(self, "qubits", self.pauli.support)
        if self.kind == MEASURE and not self.qubits:
            raise ValueError("measurement needs at least one target")

    @property
    def unitary(self) -> np.ndarray:
        return np.array(self.matrix, dtype=complex).reshape(2, 2)

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def inverse(self) -> Gate:
        if self.kind == UNITARY:
            m = self.unitary.conj().T
            return replace(self, matrix=tuple(m.ravel()), label=_dagger_label(self.label))
        if self.kind == PAULI_ROTATION:
            return replace(self, theta=-self.theta)
        if self.kind == MEASURE:
            raise ValueError("measurements have no inverse")
        return self

    def embedded(self, offset: int, n_qubits: int) -> Gate:
        """Same gate inside an ``n_qubits`` register, qubit q moved to q + offset."""
        if self.kind == PAULI_ROTATION:
            p = self.pauli
            wide = PauliString(n_qubits, p.x_bits << offset, p.z_bits << offset, p.phase)
            return replace(self, pauli=wide)
        return replace(self, qubits=tuple(q + offset for q in self.qubits))


def _is_unitary_2x2(m: tuple[complex, ...]) -> bool:
    a, b, c, d = m
    # columns orthonormal
    n0 = abs(a) ** 2 + abs(c) ** 2
    n1 = abs(b) ** 2 + abs(d) ** 2
    off = a.conjugate() * b + c.conjugate() * d
    return abs(n0 - 1) <= _UNITARY_TOL and abs(n1 - 1) <= _UNITARY_TOL and abs(off) <= _UNITARY_TOL


def _dagger_label(label: str) -> str:
    if label.endswith("_dg"):
        return label[:-3]
    return label + "_dg" if label else label


def unitary(matrix, qubit: int, label: str = "u") -> Gate:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    return Gate(UNITARY, (qubit,), matrix=tuple(complex(v) for v in m.ravel()), label=label)


def h(qubit: int) -> Gate:
    return Gate(HADAMARD, (qubit,), label="h")


def cx(control: int, target: int) -> Gate:
    return Gate(CX, (control, target), label="cx")


def cz(a: int, b: int) -> Gate:
    return Gate(CZ, (a, b), label="cz")


def cswap(control: int, a: int, b: int) -> Gate:
    return Gate(CSWAP, (control, a, b), label="cswap")


def pauli_rotation(p: PauliString, theta: float) -> Gate:
    return Gate(PAULI_ROTATION, (), pauli=p, theta=float(theta), label="exp_pauli")


def measure(qubits: Iterable[int]) -> Gate:
    return Gate(MEASURE, tuple(qubits), label="measure")


def rz(theta: float, qubit: int) -> Gate:
    """exp(-i theta/2 Z)."""
    return unitary(np.diag([cmath.exp(-0.5j * theta), cmath.exp(0.5j * theta)]), qubit, "rz")


PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
S_MATRIX = np.diag([1, 1j])
H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


@lru_cache(maxsize=None)
def pauli_gate(name: str, qubit: int) -> Gate:
    return unitary(PAULI_MATRICES[name], qubit, name.lower())


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be positive, got {self.n_qubits}")
        object.__setattr__(self, "gates", tuple(self.gates))
        seen_measure = False
        measured: set[int] = set()
        for i, g in enumerate(self.gates):
            if any(q >= self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {i} ({g.kind}) targets {g.qubits} outside {self.n_qubits} qubits")
            if g.kind == PAULI_ROTATION and g.pauli.n_qubits != self.n_qubits:
                raise ValueError(f"gate {i}: Pauli width {g.pauli.n_qubits} != circuit width {self.n_qubits}")
            if g.kind == MEASURE:
                seen_measure = True
                if measured & set(g.qubits):
                    raise ValueError(f"gate {i}: qubit measured twice")
                measured |= set(g.qubits)
            elif seen_measure:
                raise ValueError(f"gate {i}: mid-circuit measurement is not supported")

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def measured_qubits(self) -> tuple[int, ...]:
        return tuple(q for g in self.gates if g.kind == MEASURE for q in g.qubits)

    @property
    def classical_bits(self) -> int:
        return len(self.measured_qubits)

    def without_measurements(self) -> Circuit:
        return replace(self, gates=tuple(g for g in self.gates if g.kind != MEASURE))

    def measure(self, qubits: Sequence[int]) -> Circuit:
        return self.extend([measure(qubits)])

    def extend(self, gates: Iterable[Gate]) -> Circuit:
        return replace(self, gates=self.gates + tuple(gates))

    def compose(self, other: Circuit) -> Circuit:
        if other.n_qubits != self.n_qubits:
            raise ValueError("circuit widths differ")
        return self.extend(other.gates)

    def inverse(self) -> Circuit:
        if self.measured_qubits:
            raise ValueError("strip measurements before inverting")
        return replace(self, gates=tuple(g.inverse() for g in reversed(self.gates)))

    def embedded(self, offset: int, n_qubits: int) -> Circuit:
        if offset < 0 or offset + self.n_qubits > n_qubits:
            raise ValueError(f"cannot place {self.n_qubits} qubits at offset {offset} in {n_qubits}")
        return Circuit(n_qubits, tuple(g.embedded(offset, n_qubits) for g in self.gates), dict(self.metadata))

    def with_metadata(self, **items) -> Circuit:
        return replace(self, metadata={**self.metadata, **items})

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "gates": [gate_to_dict(g) for g in self.gates],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Circuit:
        return cls(
            int(data["n_qubits"]),
            tuple(gate_from_dict(g) for g in data["gates"]),
            dict(data.get("metadata", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> Circuit:
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> Circuit:
        return cls.from_json(Path(path).read_text())


def gate_to_dict(g: Gate) -> dict:
    d: dict = {"kind": g.kind, "qubits": list(g.qubits), "label": g.label}
    if g.matrix is not None:
        d["matrix"] = [[v.real, v.imag] for v in g.matrix]
    if g.pauli is not None:
        d["pauli"] = g.pauli.label()
        d["theta"] = g.theta
    return d


def gate_from_dict(d: dict) -> Gate:
    matrix = None
    if "matrix" in d:
        matrix = tuple(complex(re, im) for re, im in d["matrix"])
    pauli = PauliString.from_label(d["pauli"]) if "pauli" in d else None
    return Gate(
        d["kind"],
        tuple(d.get("qubits", ())),
        matrix=matrix,
        pauli=pauli,
        theta=float(d.get("theta", 0.0)),
        label=d.get("label", ""),
    )
