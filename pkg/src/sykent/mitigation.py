"""Zero-noise extrapolation, Pauli twirling and readout-error mitigation.

The pipelines at the bottom run a logical circuit through the full stack:
for every noise-scale factor the decomposed circuit is folded, twirled
``pauli_twirls`` times, executed, readout-corrected, and reduced to one number;
those numbers are extrapolated to zero noise. For randomized measurements the
stack is applied per unitary and the mitigated X_a are then averaged.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import circuit as C
from .circuit import Circuit, Gate
from .noise import NoiseModel, confusion_matrix
from .protocols import (
    RM,
    SWAP_MBI,
    EntropyEstimate,
    RandomizedMeasurementJob,
    SwapMbiJob,
    build_swap_test_circuit,
    counts_to_vector,
    estimate_purity_swap,
    rm_circuits,
    rm_shot_seeds,
    summarize_x,
    x_estimator,
)
from .seeding import derive_seed, rng_for
from .trotter import decompose

LINEAR = "linear"
EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class MitigationConfig:
    zne_factors: tuple[int, ...] = (1, 3, 5)
    zne_fit: str = LINEAR
    pauli_twirls: int = 10
    readout_mitigation: bool = True

    def __post_init__(self):
        factors = tuple(int(f) for f in self.zne_factors)
        object.__setattr__(self, "zne_factors", factors)
        if not factors or factors[0] != 1:
            raise ValueError("zne_factors must start at 1")
        if any(f % 2 == 0 or f < 1 for f in factors):
            raise ValueError(f"zne_factors must be odd positive integers, got {factors}")
        if any(b <= a for a, b in zip(factors, factors[1:])):
            raise ValueError(f"zne_factors must be strictly increasing, got {factors}")
        if self.zne_fit not in (LINEAR, EXPONENTIAL):
            raise ValueError(f"zne_fit must be 'linear' or 'exponential', got {self.zne_fit!r}")
        if self.pauli_twirls < 1:
            raise ValueError(f"pauli_twirls must be positive, got {self.pauli_twirls}")

    @property
    def circuits_per_logical(self) -> int:
        return len(self.zne_factors) * self.pauli_twirls

    def label(self) -> str:
        parts = []
        if len(self.zne_factors) > 1:
            parts.append("zne" + "-".join(map(str, self.zne_factors)) + f"/{self.zne_fit}")
        if self.pauli_twirls > 1:
            parts.append(f"pt{self.pauli_twirls}")
        if self.readout_mitigation:
            parts.append("ro")
        return "+".join(parts) or "none"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["zne_factors"] = list(self.zne_factors)
        return d


# --- folding and extrapolation ----------------------------------------------


def fold_circuit(circuit: Circuit, factor: int) -> Circuit:
    """Global folding U -> U (U^dagger U)^((factor-1)/2); measurements re-appended."""
    if factor < 1 or factor % 2 == 0:
        raise ValueError(f"fold factor must be an odd positive integer, got {factor}")
    if factor == 1:
        return circuit
    measured = circuit.measured_qubits
    base = circuit.without_measurements()
    inv = base.inverse()
    gates = list(base.gates)
    for _ in range((factor - 1) // 2):
        gates.extend(inv.gates)
        gates.extend(base.gates)
    if measured:
        gates.append(C.measure(measured))
    meta = {k: v for k, v in circuit.metadata.items() if k != "step_bounds"}
    meta["fold_factor"] = factor
    return Circuit(circuit.n_qubits, tuple(gates), meta)


@dataclass(frozen=True)
class ZneFit:
    value: float
    fit: str
    fallback: bool
    coefficients: tuple[float, float]


def zne_fit(points: Sequence[tuple[float, float]], fit: str = LINEAR) -> ZneFit:
    """Least-squares fit of value(factor), evaluated at factor 0.

    Linear: a + b*lam. Exponential: a*exp(-b*lam), fitted in log space; when the
    values do not share one sign it falls back to linear and sets ``fallback``.
    """
    if fit not in (LINEAR, EXPONENTIAL):
        raise ValueError(f"unknown fit {fit!r}")
    lam = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if lam.size < 2 or np.unique(lam).size != lam.size:
        raise ValueError("need at least two points with distinct factors")
    design = np.column_stack([np.ones_like(lam), lam])
    if np.linalg.matrix_rank(design) < 2:
        raise np.linalg.LinAlgError("degenerate extrapolation system")
    fallback = False
    if fit == EXPONENTIAL:
        if np.all(y > 0) or np.all(y < 0):
            sign = float(np.sign(y[0]))
            (c0, c1), *_ = np.linalg.lstsq(design, np.log(np.abs(y)), rcond=None)
            return ZneFit(sign * math.exp(c0), EXPONENTIAL, False, (sign * math.exp(c0), -c1))
        fallback = True
    (c0, c1), *_ = np.linalg.lstsq(design, y, rcond=None)
    return ZneFit(float(c0), LINEAR, fallback, (float(c0), float(c1)))


def zne_extrapolate(points: Sequence[tuple[float, float]], fit: str = LINEAR) -> float:
    return zne_fit(points, fit).value


def zne_std_error(points: Sequence[tuple[float, float]], sigmas: Sequence[float], fit: str = LINEAR) -> float:
    """Propagate independent per-factor errors through the fit (numerical Jacobian)."""
    base = zne_extrapolate(points, fit)
    var = 0.0
    for i, s in enumerate(sigmas):
        if not s:
            continue
        h = max(1e-7, 1e-4 * s)
        shifted = [(lam, v + (h if j == i else 0.0)) for j, (lam, v) in enumerate(points)]
        try:
            d = (zne_extrapolate(shifted, fit) - base) / h
        except (ValueError, np.linalg.LinAlgError):  # pragma: no cover
            d = 0.0
        var += (d * s) ** 2
    return math.sqrt(var)


# --- Pauli twirling ---------------------------------------------------------

_LETTERS = "IXYZ"


@lru_cache(maxsize=None)
def _twirl_table(kind: str) -> dict[tuple[int, int], tuple[int, int]]:
    """(pa, pb) -> (pa', pb') with (pa' (x) pb') G (pa (x) pb) = +-G."""
    if kind == C.CX:
        g = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    elif kind == C.CZ:
        g = np.diag([1, 1, 1, -1]).astype(complex)
    else:
        raise ValueError(f"cannot twirl gate kind {kind!r}")
    mats = {(i, j): np.kron(C.PAULI_MATRICES[_LETTERS[i]], C.PAULI_MATRICES[_LETTERS[j]]) for i in range(4) for j in range(4)}
    table = {}
    for key, m in mats.items():
        conj = g @ m @ g.conj().T
        for out, m2 in mats.items():
            if np.allclose(conj, m2) or np.allclose(conj, -m2):
                table[key] = out
                break
        else:  # pragma: no cover
            raise AssertionError("gate is not Clifford")
    return table


def twirl_gate(g: Gate, pa: int, pb: int) -> list[Gate]:
    a, b = g.qubits
    qa, qb = _twirl_table(g.kind)[(pa, pb)]
    before = [C.pauli_gate(_LETTERS[k], q) for k, q in ((pa, a), (pb, b)) if k]
    after = [C.pauli_gate(_LETTERS[k], q) for k, q in ((qa, a), (qb, b)) if k]
    return before + [g] + after


def _copy_keys(circuit: Circuit, copy_width: int | None) -> list:
    """Sharing key per two-qubit gate, or None for an independent draw.

    In a two-copy circuit (copy 1 on qubits 0..w-1, copy 2 on w..2w-1) the k-th
    gate on local pair (a, b) of either copy gets the key (a, b, k), so both
    copies carry the same Pauli frame and keep preparing the same state.
    """
    keys = []
    seen: dict[tuple, int] = {}
    for g in circuit.gates:
        if g.kind not in C.TWO_QUBIT_KINDS:
            continue
        copies = {q // copy_width for q in g.qubits} if copy_width else {None}
        if not copy_width or len(copies) != 1 or copies.pop() > 1:
            keys.append(None)
            continue
        copy = g.qubits[0] // copy_width
        local = (g.kind,) + tuple(q % copy_width for q in g.qubits)
        count_key = (copy,) + local
        k = seen.get(count_key, 0)
        seen[count_key] = k + 1
        keys.append(local + (k,))
    return keys


def pauli_twirl(circuit: Circuit, n_twirls: int, rng, copy_width: int | None = None) -> list[Circuit]:
    """``n_twirls`` logically equivalent copies with every CX/CZ Pauli-framed.

    Identity draws insert nothing. Other two-qubit gate kinds are rejected.
    ``copy_width`` makes the two state copies of a swap-test circuit share
    their draws; by default every gate is framed independently.
    """
    if n_twirls < 1:
        raise ValueError(f"n_twirls must be positive, got {n_twirls}")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.Generator(np.random.PCG64(int(rng)))
    for g in circuit.gates:
        if g.kind in (C.PAULI_ROTATION, C.CSWAP):
            raise ValueError(f"decompose {g.kind} gates before twirling")
    keys = _copy_keys(circuit, copy_width)
    n2 = len(keys)
    out = []
    for i in range(n_twirls):
        draws = rng.integers(0, 4, size=(n2, 2))
        first: dict[tuple, int] = {}
        gates: list[Gate] = []
        k = 0
        for g in circuit.gates:
            if g.kind in C.TWO_QUBIT_KINDS:
                src = k if keys[k] is None else first.setdefault(keys[k], k)
                gates.extend(twirl_gate(g, int(draws[src, 0]), int(draws[src, 1])))
                k += 1
            else:
                gates.append(g)
        meta = {kk: v for kk, v in circuit.metadata.items() if kk != "step_bounds"}
        meta["twirl_index"] = i
        out.append(Circuit(circuit.n_qubits, tuple(gates), meta))
    return out


# --- readout mitigation -----------------------------------------------------


class QuasiDistribution(dict):
    """Bitstring -> quasi-probability; entries may be slightly negative."""

    @property
    def negative_mass(self) -> float:
        return -sum(v for v in self.values() if v < 0)

    @property
    def has_negative(self) -> bool:
        return any(v < 0 for v in self.values())


def readout_mitigate(counts: Mapping[str, float], flip_probs: Sequence[tuple[float, float]]) -> QuasiDistribution:
    """Invert tensored 2x2 confusion matrices on the empirical distribution.

    ``flip_probs[k]`` = (p(1|0), p(0|1)) for bit k of the bitstrings (leftmost = 0).
    """
    width = len(flip_probs)
    total = float(sum(counts.values()))
    if total <= 0:
        raise ValueError("empty counts")
    vec = counts_to_vector(counts, width) / total
    t = vec.reshape((2,) * width)
    for k, (p10, p01) in enumerate(flip_probs):
        a = confusion_matrix(p10, p01)
        if abs(np.linalg.det(a)) < 1e-12:
            raise np.linalg.LinAlgError(f"confusion matrix for bit {k} is singular (p(1|0)+p(0|1)=1)")
        t = np.moveaxis(np.tensordot(np.linalg.inv(a), t, axes=([1], [k])), 0, k)
    out = t.reshape(-1)
    return QuasiDistribution({format(i, f"0{width}b"): float(v) for i, v in enumerate(out)})


def calibrate_readout(backend, qubits: Sequence[int], n_qubits: int, shots: int, seed: int = 0) -> list[tuple[float, float]]:
    """Estimate per-qubit (p(1|0), p(0|1)) from all-zeros and all-ones preparations."""
    zero = Circuit(n_qubits, (C.measure(qubits),))
    ones = Circuit(n_qubits, tuple(C.pauli_gate("X", q) for q in qubits) + (C.measure(qubits),))
    c0, c1 = backend.run([zero, ones], shots, [derive_seed(seed, "cal", 0), derive_seed(seed, "cal", 1)])
    out = []
    for k in range(len(qubits)):
        p10 = sum(c for b, c in c0.items() if b[k] == "1") / shots
        p01 = sum(c for b, c in c1.items() if b[k] == "0") / shots
        out.append((p10, p01))
    return out


# --- pipelines --------------------------------------------------------------


def mitigation_variants(circuit: Circuit, config: MitigationConfig, seed: int) -> list[tuple[int, Circuit]]:
    """(factor, circuit) for every folded and twirled variant of ``circuit``."""
    physical = decompose(circuit)
    out = []
    for f in config.zne_factors:
        folded = fold_circuit(physical, f)
        if config.pauli_twirls > 1:
            variants = pauli_twirl(folded, config.pauli_twirls, rng_for(seed, "twirl", f))
        else:
            variants = [folded]
        out.extend((f, v) for v in variants)
    return out


def _merge(counts: Sequence[Mapping[str, int]]) -> dict[str, int]:
    total: dict[str, int] = {}
    for c in counts:
        for k, v in c.items():
            total[k] = total.get(k, 0) + v
    return total


@dataclass
class MitigatedResult:
    raw: EntropyEstimate
    mitigated: EntropyEstimate
    stages: dict = field(default_factory=dict)


def _distribution(counts: Mapping[str, int], flips, config: MitigationConfig) -> dict[str, float]:
    if config.readout_mitigation and flips is not None:
        return readout_mitigate(counts, flips)
    total = sum(counts.values())
    return {k: v / total for k, v in counts.items()}


def _execute(backend, circuits: Sequence[Circuit], shots: int, seeds: Sequence[int]):
    return backend.run(list(circuits), shots, list(seeds))


def mitigated_swap_mbi(job: SwapMbiJob, backend, config: MitigationConfig, noise: NoiseModel | None,
                       seed: int = 0) -> MitigatedResult:
    """Raw and fully mitigated swap-test estimates on a noisy backend.

    Each variant circuit gets ``job.shots`` shots; the raw estimate uses the
    unfolded, untwirled circuit with the same shots.
    """
    logical = build_swap_test_circuit(job)
    flips = noise.readout_for(logical.measured_qubits) if noise is not None else None
    variants = mitigation_variants(logical, config, seed)
    physical = decompose(logical)
    circuits = [physical] + [c for _, c in variants]
    seeds = [derive_seed(seed, "raw")] + [derive_seed(seed, "variant", i) for i in range(len(variants))]
    results = _execute(backend, circuits, job.shots, seeds)
    raw = estimate_purity_swap(results[0], shots=job.shots)
    points, sigmas, per_factor = [], [], {}
    for f in config.zne_factors:
        merged = _merge([r for (ff, _), r in zip(variants, results[1:]) if ff == f])
        shots = sum(merged.values())
        dist = _distribution(merged, flips, config)
        p0 = dist.get("0", 0.0)
        purity = 2 * p0 - 1
        sigma = 2 * math.sqrt(max(p0 * (1 - p0), 0.0) / shots)
        points.append((f, purity))
        sigmas.append(sigma)
        per_factor[f] = purity
    value = zne_extrapolate(points, config.zne_fit) if len(points) > 1 else points[0][1]
    err = zne_std_error(points, sigmas, config.zne_fit) if len(points) > 1 else sigmas[0]
    mitigated = EntropyEstimate.from_purity(value, err, protocol=SWAP_MBI, mitigation=config.label())
    stages = {"raw_purity": raw.purity, "per_factor_purity": per_factor, "extrapolated_purity": value,
              "n_circuits": len(circuits) - 1}
    return MitigatedResult(raw, mitigated, stages)


def mitigated_randomized_measurement(job: RandomizedMeasurementJob, backend, config: MitigationConfig,
                                     noise: NoiseModel | None, n_bootstrap: int = 1000) -> MitigatedResult:
    """Per-unitary ZNE/PT/readout mitigation of X_a, then the ensemble mean."""
    width = len(job.subsystem)
    flips = noise.readout_for(job.subsystem) if noise is not None else None
    logical = rm_circuits(job)
    shot_seeds = rm_shot_seeds(job)
    circuits, seeds, index = [], [], []
    for a, circ in enumerate(logical):
        circuits.append(decompose(circ))
        seeds.append(shot_seeds[a])
        index.append((a, 0, "raw"))
        for i, (f, v) in enumerate(mitigation_variants(circ, config, derive_seed(job.seed, "unitary", a))):
            circuits.append(v)
            seeds.append(derive_seed(job.seed, "variant", a, i))
            index.append((a, f, "variant"))
    results = _execute(backend, circuits, job.shots_per_unitary, seeds)
    raw_x = np.zeros(job.n_unitaries)
    buckets: dict[tuple[int, int], list] = {}
    for (a, f, kind), r in zip(index, results):
        if kind == "raw":
            p = counts_to_vector(r, width)
            raw_x[a] = x_estimator(p / p.sum())
        else:
            buckets.setdefault((a, f), []).append(r)
    mit_x = np.zeros(job.n_unitaries)
    per_factor = {f: np.zeros(job.n_unitaries) for f in config.zne_factors}
    for a in range(job.n_unitaries):
        points = []
        for f in config.zne_factors:
            dist = _distribution(_merge(buckets[(a, f)]), flips, config)
            xa = float(x_estimator(counts_to_vector(dist, width)))
            per_factor[f][a] = xa
            points.append((f, xa))
        mit_x[a] = zne_extrapolate(points, config.zne_fit) if len(points) > 1 else points[0][1]
    raw = summarize_x(raw_x, job.seed, n_bootstrap)
    mitigated = summarize_x(mit_x, job.seed, n_bootstrap)
    mitigated.meta["mitigation"] = config.label()
    stages = {
        "raw_purity": raw.purity,
        "per_factor_purity": {f: float(v.mean()) for f, v in per_factor.items()},
        "extrapolated_purity": mitigated.purity,
        "n_circuits": len(circuits) - job.n_unitaries,
    }
    for est in (raw, mitigated):
        est.meta.update(protocol=RM, subsystem=list(job.subsystem), shots=job.shots_per_unitary)
    return MitigatedResult(raw, mitigated, stages)
