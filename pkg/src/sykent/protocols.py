"""Purity and Renyi-2 estimation: swap test and randomized measurements.

Both protocols take a *base circuit* that prepares the state of interest from
|0...0> and a subsystem (list of qubits). Backends are any object with

    run(circuits, shots, seeds) -> list[dict[str, int]]
    probabilities(circuits) -> list[dict[str, float]]

``exact=True`` selects the second method (shots -> infinity). Without an explicit
backend the noiseless statevector simulator is used directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import circuit as C
from .circuit import Circuit
from .oracle import reduced_density_matrix
from .seeding import derive_seed, rng_for
from .statevector import MAX_QUBITS, exact_probabilities, run_circuit, sample_from_probabilities, simulate

SWAP_MBI = "swap_mbi"
RM = "rm"


def _check_subsystem(subsystem: Sequence[int], n_qubits: int) -> tuple[int, ...]:
    sub = tuple(int(q) for q in subsystem)
    if not sub:
        raise ValueError("subsystem must be nonempty")
    if len(set(sub)) != len(sub) or any(not 0 <= q < n_qubits for q in sub):
        raise ValueError(f"invalid subsystem {list(sub)} for {n_qubits} qubits")
    if len(sub) >= n_qubits:
        raise ValueError("subsystem must be a proper subset of the qubits")
    return sub


@dataclass(frozen=True)
class SwapMbiJob:
    base_circuit: Circuit
    subsystem: tuple[int, ...]
    shots: int = 10_000
    # the swap test itself is fine with L = N (global purity), so properness is optional here
    allow_full: bool = False

    def __post_init__(self):
        n = self.base_circuit.n_qubits
        sub = tuple(int(q) for q in self.subsystem)
        if self.allow_full and sorted(sub) == list(range(n)):
            object.__setattr__(self, "subsystem", sub)
        else:
            object.__setattr__(self, "subsystem", _check_subsystem(sub, n))
        if self.shots < 1:
            raise ValueError(f"shots must be positive, got {self.shots}")


@dataclass(frozen=True)
class RandomizedMeasurementJob:
    base_circuit: Circuit
    subsystem: tuple[int, ...]
    n_unitaries: int = 150
    shots_per_unitary: int = 1024
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "subsystem", _check_subsystem(self.subsystem, self.base_circuit.n_qubits))
        if self.n_unitaries < 2:
            raise ValueError("n_unitaries must be at least 2 to estimate a variance")
        if self.shots_per_unitary < 1:
            raise ValueError(f"shots_per_unitary must be positive, got {self.shots_per_unitary}")


@dataclass
class EntropyEstimate:
    """Purity and S2 with their standard errors.

    ``std_error`` refers to ``renyi2``; ``purity_std_error`` to ``purity``. When the
    purity estimate is not positive, ``defined`` is False and ``renyi2`` is NaN
    while the raw purity is kept.
    """

    purity: float
    renyi2: float
    std_error: float
    purity_std_error: float
    defined: bool = True
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_purity(cls, purity: float, purity_std_error: float, **meta) -> EntropyEstimate:
        if purity > 0:
            return cls(purity, -math.log(purity), purity_std_error / purity, purity_std_error, True, meta)
        return cls(purity, math.nan, math.nan, purity_std_error, False, meta)

    @property
    def relative_std_error(self) -> float:
        if not self.defined or self.renyi2 == 0:
            return math.inf
        return self.std_error / abs(self.renyi2)


# --- swap test --------------------------------------------------------------


def build_swap_test_circuit(job: SwapMbiJob) -> Circuit:
    """Two copies of the base state plus an ancilla; C-SWAP over the subsystem.

    Copy 1 occupies qubits 0..n-1, copy 2 qubits n..2n-1, the ancilla is qubit
    2n and is the only measured qubit.
    """
    base = job.base_circuit.without_measurements()
    n = base.n_qubits
    width = 2 * n + 1
    if width > MAX_QUBITS:
        raise ValueError(f"swap test needs {width} qubits, engine limit is {MAX_QUBITS}")
    anc = 2 * n
    gates = list(base.embedded(0, width).gates) + list(base.embedded(n, width).gates)
    gates.append(C.h(anc))
    gates.extend(C.cswap(anc, q, q + n) for q in job.subsystem)
    gates.append(C.h(anc))
    gates.append(C.measure([anc]))
    meta = {"protocol": SWAP_MBI, "subsystem": list(job.subsystem), "copy_width": n}
    return Circuit(width, tuple(gates), meta)


def estimate_purity_swap(counts: Mapping[str, float], shots: float | None = None) -> EntropyEstimate:
    """Purity = 2 P0 - 1 from ancilla outcomes.

    ``counts`` may hold integer counts or exact probabilities; pass ``shots=inf``
    (or give probabilities summing to one with ``shots=None``) for the exact mode.
    """
    total = float(sum(counts.values()))
    if total <= 0:
        raise ValueError("empty counts")
    p0 = counts.get("0", 0) / total
    if shots is None:
        shots = total if all(float(v).is_integer() for v in counts.values()) and total > 1 else math.inf
    sigma_p0 = math.sqrt(max(p0 * (1 - p0), 0.0) / shots) if math.isfinite(shots) else 0.0
    return EntropyEstimate.from_purity(2 * p0 - 1, 2 * sigma_p0, protocol=SWAP_MBI, shots=shots, p0=p0)


def run_swap_mbi(job: SwapMbiJob, backend=None, exact: bool = False, seed: int = 0) -> EntropyEstimate:
    circ = build_swap_test_circuit(job)
    if exact:
        probs = backend.probabilities([circ])[0] if backend else exact_probabilities(circ)
        est = estimate_purity_swap(probs, shots=math.inf)
    else:
        s = derive_seed(seed, SWAP_MBI)
        counts = backend.run([circ], job.shots, [s])[0] if backend else run_circuit(circ, job.shots, s)
        est = estimate_purity_swap(counts, shots=job.shots)
    est.meta.update(subsystem=list(job.subsystem), total_shots=math.inf if exact else job.shots)
    return est


# --- randomized measurements ------------------------------------------------


def hamming_distance(s: str, s_prime: str) -> int:
    if len(s) != len(s_prime):
        raise ValueError(f"bitstring lengths differ: {len(s)} vs {len(s_prime)}")
    return sum(a != b for a, b in zip(s, s_prime))


def cue_unitaries(rng: np.random.Generator, shape: tuple[int, ...] = ()) -> np.ndarray:
    """Haar-random SU(2) matrices of the given batch shape.

    QR of a complex Ginibre matrix with the phases of R's diagonal moved into Q
    gives a Haar U(2) element; dividing by sqrt(det) lands in SU(2). Consumes
    8 standard normals per matrix, in batch order.
    """
    g = rng.standard_normal(shape + (2, 2, 2))
    z = (g[..., 0] + 1j * g[..., 1]) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (d / np.abs(d))[..., None, :]
    det = np.linalg.det(q)
    return q / np.sqrt(det)[..., None, None]


def sample_cue_unitary(rng: np.random.Generator) -> np.ndarray:
    return cue_unitaries(rng)


def rm_unitaries(seed: int, n_unitaries: int, n_sites: int) -> np.ndarray:
    """Local unitaries for one RM job, shape (n_unitaries, n_sites, 2, 2).

    All draws come from one stream, so unitary ``a`` depends only on
    (seed, a, n_sites) and every worker regenerates the same set.
    """
    return cue_unitaries(rng_for(seed, "rm-unitaries", n_sites), (n_unitaries, n_sites))


@lru_cache(maxsize=16)
def hamming_kernel(n_sites: int) -> np.ndarray:
    """K[s, s'] = (-2)^(-D[s, s']), built as a tensor power of the 1-qubit kernel."""
    k1 = np.array([[1.0, -0.5], [-0.5, 1.0]])
    k = np.ones((1, 1))
    for _ in range(n_sites):
        k = np.kron(k, k1)
    k.setflags(write=False)
    return k


def x_estimator(probs: np.ndarray) -> np.ndarray:
    """X_a = 2^L sum_{s,s'} (-2)^(-D) P(s) P(s') along the last axis."""
    probs = np.asarray(probs, dtype=float)
    n_sites = int(round(math.log2(probs.shape[-1])))
    k = hamming_kernel(n_sites)
    return 2**n_sites * np.einsum("...i,ij,...j->...", probs, k, probs)


def x_estimator_unbiased(counts: np.ndarray) -> np.ndarray:
    """X_a with same-shot pairs removed (U-statistic); needs at least 2 shots."""
    counts = np.asarray(counts, dtype=float)
    n_sites = int(round(math.log2(counts.shape[-1])))
    m = counts.sum(axis=-1)
    k = hamming_kernel(n_sites)
    pair_sum = np.einsum("...i,ij,...j->...", counts, k, counts) - m
    return 2**n_sites * pair_sum / (m * (m - 1))


def counts_to_vector(counts: Mapping[str, float], width: int) -> np.ndarray:
    v = np.zeros(2**width)
    for bits, c in counts.items():
        if len(bits) != width:
            raise ValueError(f"bitstring {bits!r} is not {width} bits wide")
        v[int(bits, 2)] += c
    return v


def local_unitary_probabilities(rho: np.ndarray, unitaries: np.ndarray) -> np.ndarray:
    """diag(U rho U^dagger) for U = U_1 (x) ... (x) U_L, batched over unitaries.

    ``unitaries`` has shape (batch, L, 2, 2); returns (batch, 2^L).
    """
    batch, n_sites = unitaries.shape[:2]
    u = np.ones((batch, 1, 1), dtype=complex)
    for k in range(n_sites):
        u = np.einsum("bij,bkl->bikjl", u, unitaries[:, k]).reshape(batch, 2 * u.shape[1], 2 * u.shape[2])
    probs = np.einsum("bsi,ij,bsj->bs", u, rho, u.conj()).real
    return np.clip(probs, 0.0, None)


def rm_circuits(job: RandomizedMeasurementJob, unitaries: np.ndarray | None = None) -> list[Circuit]:
    """One circuit per unitary: base, local rotations on the subsystem, measurement."""
    if unitaries is None:
        unitaries = rm_unitaries(job.seed, job.n_unitaries, len(job.subsystem))
    base = job.base_circuit.without_measurements()
    out = []
    for a, us in enumerate(unitaries):
        gates = [C.unitary(u, q, "cue") for u, q in zip(us, job.subsystem)]
        gates.append(C.measure(job.subsystem))
        out.append(base.extend(gates).with_metadata(protocol=RM, unitary_index=a))
    return out


def rm_shot_seeds(job: RandomizedMeasurementJob) -> list[int]:
    return [derive_seed(job.seed, "rm-shots", a) for a in range(job.n_unitaries)]


def summarize_x(x_values: np.ndarray, seed: int, n_bootstrap: int = 1000, **meta) -> EntropyEstimate:
    """Purity = mean X_a; error bar from bootstrap over unitaries when requested."""
    x_values = np.asarray(x_values, dtype=float)
    n = x_values.size
    x_bar = float(x_values.mean())
    analytic = float(x_values.std(ddof=1) / math.sqrt(n))
    if n_bootstrap:
        rng = rng_for(seed, "rm-bootstrap")
        means = np.empty(n_bootstrap)
        chunk = max(1, 2_000_000 // n)
        for start in range(0, n_bootstrap, chunk):
            stop = min(n_bootstrap, start + chunk)
            idx = rng.integers(0, n, size=(stop - start, n))
            means[start:stop] = x_values[idx].mean(axis=1)
        sigma = float(means.std(ddof=1))
    else:
        sigma = analytic
    return EntropyEstimate.from_purity(
        x_bar, sigma, protocol=RM, n_unitaries=n, analytic_std_error=analytic,
        bootstrap=n_bootstrap, x_values=x_values,
    )


def run_randomized_measurement(
    job: RandomizedMeasurementJob,
    backend=None,
    exact: bool = False,
    estimator: str = "plugin",
    n_bootstrap: int = 1000,
) -> EntropyEstimate:
    """Mean of X_a over ``job.n_unitaries`` local CUE rotations.

    estimator: "plugin" uses P(s) = counts/shots; "unbiased" drops same-shot pairs.
    """
    if estimator not in ("plugin", "unbiased"):
        raise ValueError(f"unknown estimator {estimator!r}")
    n_sites = len(job.subsystem)
    unitaries = rm_unitaries(job.seed, job.n_unitaries, n_sites)
    seeds = rm_shot_seeds(job)
    if backend is None:
        # noiseless: evolve once, then rotate the reduced state per unitary
        psi = simulate(job.base_circuit.without_measurements())
        rho = reduced_density_matrix(psi, list(job.subsystem)).matrix
        probs = local_unitary_probabilities(rho, unitaries)
        if exact:
            dists = probs
        else:
            dists = np.array([
                counts_to_vector(sample_from_probabilities(p, n_sites, job.shots_per_unitary, s), n_sites)
                for p, s in zip(probs, seeds)
            ])
    else:
        circuits = rm_circuits(job, unitaries)
        if exact:
            results = backend.probabilities(circuits)
        else:
            results = backend.run(circuits, job.shots_per_unitary, seeds)
        dists = np.array([counts_to_vector(r, n_sites) for r in results])
    est = estimate_purity_rm(dists, exact=exact, estimator=estimator, seed=job.seed, n_bootstrap=n_bootstrap)
    est.meta.update(
        subsystem=list(job.subsystem),
        shots=math.inf if exact else job.shots_per_unitary,
        total_shots=math.inf if exact else job.shots_per_unitary * job.n_unitaries,
    )
    return est


def estimate_purity_rm(dists: np.ndarray, exact: bool = False, estimator: str = "plugin",
                       seed: int = 0, n_bootstrap: int = 1000) -> EntropyEstimate:
    """Estimate from per-unitary outcome counts (or probabilities when ``exact``)."""
    dists = np.asarray(dists, dtype=float)
    if exact or estimator == "plugin":
        p = dists / dists.sum(axis=1, keepdims=True)
        x = x_estimator(p)
    else:
        x = x_estimator_unbiased(dists)
    est = summarize_x(x, seed, n_bootstrap)
    est.meta["estimator"] = "exact" if exact else estimator
    return est
