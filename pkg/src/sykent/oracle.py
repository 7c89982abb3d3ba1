"""Exact reference quantities for small systems."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .statevector import Statevector
from .syk import SykHamiltonian

MAX_ORACLE_QUBITS = 12
_TOL = 1e-10


@dataclass
class DensityMatrix:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        dim = 2**self.n_qubits
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {self.matrix.shape}")

    def validate(self, tol: float = _TOL) -> None:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=tol, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError(f"density matrix trace {np.trace(m).real:.3g} != 1")
        if np.linalg.eigvalsh(m).min() < -tol:
            raise ValueError("density matrix has negative eigenvalues")

    def eigenvalues(self) -> np.ndarray:
        """Spectrum with floating-point negatives clipped to zero."""
        return np.clip(np.linalg.eigvalsh(self.matrix), 0.0, None)

    def purity(self) -> float:
        m = self.matrix
        # Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        return float(np.sum(np.abs(m) ** 2))


@lru_cache(maxsize=64)
def _eigensystem(h: SykHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh(h.to_matrix())


def exact_evolve(h: SykHamiltonian, state: Statevector, t: float) -> Statevector:
    """exp(-iHt)|psi> through the eigendecomposition of the dense H."""
    if h.n_qubits > MAX_ORACLE_QUBITS:
        raise ValueError(f"dense evolution limited to {MAX_ORACLE_QUBITS} qubits, got {h.n_qubits}")
    if state.n_qubits != h.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, Hamiltonian {h.n_qubits}")
    if t == 0:
        return state.copy()
    evals, evecs = _eigensystem(h)
    coeffs = evecs.conj().T @ state.amplitudes
    return Statevector(state.n_qubits, evecs @ (np.exp(-1j * evals * t) * coeffs))


def reduced_density_matrix(state: Statevector | np.ndarray, keep: Sequence[int], n_qubits: int | None = None) -> DensityMatrix:
    """rho_keep = Tr_rest |psi><psi|; the kept qubits stay in the order given."""
    if isinstance(state, Statevector):
        psi, n = state.amplitudes, state.n_qubits
    else:
        psi = np.asarray(state, dtype=np.complex128)
        n = n_qubits if n_qubits is not None else int(np.log2(psi.size))
    keep = list(keep)
    if not keep:
        raise ValueError("keep must be nonempty")
    if len(set(keep)) != len(keep) or any(not 0 <= q < n for q in keep):
        raise ValueError(f"invalid subsystem {keep} for {n} qubits")
    rest = [q for q in range(n) if q not in keep]
    m = psi.reshape((2,) * n).transpose(keep + rest).reshape(2 ** len(keep), 2 ** len(rest))
    return DensityMatrix(len(keep), m @ m.conj().T)


def purity(rho: DensityMatrix) -> float:
    return rho.purity()


def renyi_entropy(rho: DensityMatrix, n: int = 2, base: float | None = None) -> float:
    """(1/(1-n)) log Tr(rho^n); natural log unless ``base`` is given."""
    if n < 2:
        raise ValueError(f"Renyi order must be an integer >= 2, got {n}")
    if n == 2:
        tr = rho.purity()
    else:
        tr = float(np.sum(rho.eigenvalues() ** n))
    s = np.log(tr) / (1 - n)
    return float(s / np.log(base)) if base else float(s)


def von_neumann_entropy(rho: DensityMatrix, base: float | None = None) -> float:
    lam = rho.eigenvalues()
    lam = lam[lam > 0]
    s = -float(np.sum(lam * np.log(lam)))
    s = max(s, 0.0)
    return s / float(np.log(base)) if base else s


def state_distance(a: Statevector, b: Statevector) -> float:
    return float(np.linalg.norm(a.amplitudes - b.amplitudes))
