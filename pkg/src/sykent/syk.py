"""SYK Hamiltonian with Gaussian couplings, expressed as a Pauli sum.

Couplings are drawn with numpy's ``Generator(PCG64(seed)).standard_normal``
(ziggurat transform), one draw per index tuple in lexicographic order, then
scaled by sigma = sqrt((q-1)! J^2 / N^(q-1)). PCG64 and the ziggurat normal
are platform independent, so a seed pins the coupling set bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import reduce
from itertools import combinations
from pathlib import Path

import numpy as np

from .pauli import PauliString, majorana_to_pauli, multiply


@dataclass(frozen=True)
class SykParams:
    n_majorana: int = 6
    q: int = 4
    j_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_majorana < 2 or self.n_majorana % 2:
            raise ValueError(f"n_majorana must be a positive even integer, got {self.n_majorana}")
        if self.q < 2 or self.q % 2:
            raise ValueError(f"q must be a positive even integer, got {self.q}")
        if self.q > self.n_majorana:
            raise ValueError(f"q={self.q} exceeds n_majorana={self.n_majorana}")
        if not self.j_scale > 0:
            raise ValueError(f"j_scale must be positive, got {self.j_scale}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def n_qubits(self) -> int:
        return self.n_majorana // 2

    @property
    def coupling_variance(self) -> float:
        return math.factorial(self.q - 1) * self.j_scale**2 / self.n_majorana ** (self.q - 1)

    @property
    def n_terms(self) -> int:
        return math.comb(self.n_majorana, self.q)


def sample_couplings(params: SykParams) -> dict[tuple[int, ...], float]:
    """Independent N(0, sigma^2) coupling for every 1 <= i1 < ... < iq <= N."""
    tuples = list(combinations(range(1, params.n_majorana + 1), params.q))
    rng = np.random.Generator(np.random.PCG64(params.seed))
    draws = rng.standard_normal(len(tuples)) * math.sqrt(params.coupling_variance)
    return {t: float(v) for t, v in zip(tuples, draws)}


@dataclass(frozen=True)
class SykHamiltonian:
    params: SykParams
    terms: tuple[tuple[float, PauliString], ...]

    @property
    def n_qubits(self) -> int:
        return self.params.n_qubits

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        h = np.zeros((dim, dim), dtype=complex)
        for c, p in self.terms:
            h += c * p.to_matrix()
        return h

    def to_dict(self) -> dict:
        return {
            "params": asdict(self.params),
            # repr round-trips floats exactly
            "terms": [[repr(c), p.label()] for c, p in self.terms],
        }

    @classmethod
    def from_dict(cls, data: dict) -> SykHamiltonian:
        params = SykParams(**data["params"])
        terms = tuple((float(c), PauliString.from_label(s)) for c, s in data["terms"])
        for _, p in terms:
            if p.n_qubits != params.n_qubits:
                raise ValueError(f"term {p} does not act on {params.n_qubits} qubits")
        return cls(params, terms)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> SykHamiltonian:
        return cls.from_dict(json.loads(Path(path).read_text()))


def majorana_product(indices: tuple[int, ...], n_qubits: int) -> PauliString:
    images = [majorana_to_pauli(i, n_qubits) for i in indices]
    return reduce(multiply, images)


def build_hamiltonian(params: SykParams) -> SykHamiltonian:
    """H = i^(q/2) sum J_{i1..iq} chi_i1 ... chi_iq as (a_n, P_n) pairs.

    Terms keep lexicographic index order; near-zero couplings are not pruned.
    """
    n_qubits = params.n_qubits
    if n_qubits < 2:
        raise ValueError("need at least two qubits (n_majorana >= 4)")
    terms = []
    for idx, j in sample_couplings(params).items():
        prod = majorana_product(idx, n_qubits)
        phase = (prod.phase + params.q // 2) % 4
        if phase % 2:
            raise ArithmeticError(f"term {idx} has non-real phase i^{phase}")
        sign = 1.0 if phase == 0 else -1.0
        terms.append((sign * j, prod.without_phase()))
    return SykHamiltonian(params, tuple(terms))
