"""Batch execution of circuit campaigns with multi-programming packages.

Up to ``pack_size`` independent circuits share one wide register, laid out left
to right with ``buffer_qubits`` idle qubits between neighbours. Every job draws
its shots from a seed derived from (master_seed, job_id), so in the default
crosstalk-free mode packing and scheduling never change a job's counts.

With ``crosstalk > 0`` a package runs as one wide noisy simulation in which
every two-qubit gate touching a package boundary may kick a Z(x)Z error onto
the neighbouring qubit across that boundary (a buffer qubit or another job).
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import circuit as C
from .backend import SimulatorBackend
from .circuit import Circuit, Gate
from .noise import NoiseModel, TrajectoryRunner, _flip_bits, _split
from .seeding import derive_seed, rng_for
from .statevector import MAX_QUBITS, marginal_probabilities, simulate
from .trotter import decompose, is_decomposed


@dataclass(frozen=True)
class QmpPackage:
    """Jobs placed side by side on one linear register."""

    package_id: int
    job_ids: tuple[str, ...]
    members: tuple[tuple[Circuit, int], ...]
    buffer_qubits: int = 1

    def __post_init__(self):
        if len(self.job_ids) != len(self.members):
            raise ValueError("one job id per member")
        if self.buffer_qubits < 0:
            raise ValueError("buffer_qubits must be nonnegative")
        end = 0
        for circ, offset in self.members:
            if offset < end:
                raise ValueError("member qubit ranges overlap")
            end = offset + circ.n_qubits
        if end > MAX_QUBITS:
            raise ValueError(f"package needs {end} qubits, engine limit is {MAX_QUBITS}")

    @property
    def total_qubits(self) -> int:
        circ, offset = self.members[-1]
        return offset + circ.n_qubits

    def ranges(self) -> list[range]:
        return [range(off, off + c.n_qubits) for c, off in self.members]

    def buffer_positions(self) -> list[int]:
        used = {q for r in self.ranges() for q in r}
        return [q for q in range(self.total_qubits) if q not in used]

    def composite(self) -> Circuit:
        """Wide circuit with member gates interleaved moment by moment.

        Gate i of every member runs in moment i, which is what lets crosstalk
        from one member land mid-circuit in its neighbour.
        """
        n = self.total_qubits
        bodies = [c.without_measurements().embedded(off, n).gates for c, off in self.members]
        gates: list[Gate] = []
        for i in range(max(len(b) for b in bodies)):
            gates.extend(b[i] for b in bodies if i < len(b))
        measured = [q + off for c, off in self.members for q in _targets(c)]
        gates.append(C.measure(measured))
        return Circuit(n, tuple(gates), {"package_id": self.package_id, "job_ids": list(self.job_ids)})

    def bit_slices(self) -> list[slice]:
        """Slices of the composite bitstring that belong to each member."""
        out, start = [], 0
        for c, _ in self.members:
            width = len(_targets(c))
            out.append(slice(start, start + width))
            start += width
        return out


def _targets(circuit: Circuit) -> tuple[int, ...]:
    return circuit.measured_qubits or tuple(range(circuit.n_qubits))


def pack(circuits: Sequence[Circuit], pack_size: int = 5, buffer_qubits: int = 1,
         job_ids: Sequence[str] | None = None, max_qubits: int = MAX_QUBITS) -> list[QmpPackage]:
    """Greedy order-preserving packing.

    A package closes when it holds ``pack_size`` members or the next circuit
    would push it past ``max_qubits``.
    """
    if pack_size < 1:
        raise ValueError(f"pack_size must be at least 1, got {pack_size}")
    if buffer_qubits < 0:
        raise ValueError(f"buffer_qubits must be nonnegative, got {buffer_qubits}")
    ids = [str(i) for i in range(len(circuits))] if job_ids is None else [str(j) for j in job_ids]
    if len(ids) != len(circuits):
        raise ValueError("one job id per circuit")
    packages: list[QmpPackage] = []
    members: list[tuple[Circuit, int]] = []
    member_ids: list[str] = []
    cursor = 0

    def close():
        nonlocal members, member_ids, cursor
        if members:
            packages.append(QmpPackage(len(packages), tuple(member_ids), tuple(members), buffer_qubits))
        members, member_ids, cursor = [], [], 0

    for jid, circ in zip(ids, circuits):
        if circ.n_qubits > max_qubits:
            raise ValueError(f"job {jid}: {circ.n_qubits} qubits exceed the engine limit of {max_qubits}")
        offset = cursor + (buffer_qubits if members else 0)
        if members and (len(members) == pack_size or offset + circ.n_qubits > max_qubits):
            close()
            offset = 0
        members.append((circ, offset))
        member_ids.append(jid)
        cursor = offset + circ.n_qubits
    close()
    return packages


def package_count(n_circuits: int, pack_size: int) -> int:
    return math.ceil(n_circuits / pack_size)


@dataclass
class CampaignSpec:
    circuits: Sequence[Circuit]
    shots: int
    job_ids: Sequence[str] | None = None
    pack_size: int = 5
    buffer_qubits: int = 1
    master_seed: int = 0
    worker_count: int = 1
    # explicit per-job seeds override the (master_seed, job_id) derivation
    seeds: Mapping[str, int] | None = None

    def __post_init__(self):
        if self.pack_size < 1:
            raise ValueError(f"pack_size must be at least 1, got {self.pack_size}")
        if self.worker_count < 1:
            raise ValueError(f"worker_count must be at least 1, got {self.worker_count}")
        if self.shots < 1:
            raise ValueError(f"shots must be positive, got {self.shots}")
        if self.job_ids is None:
            self.job_ids = [str(i) for i in range(len(self.circuits))]
        self.job_ids = [str(j) for j in self.job_ids]
        if len(self.job_ids) != len(self.circuits):
            raise ValueError("one job id per circuit")
        if len(set(self.job_ids)) != len(self.job_ids):
            raise ValueError("job ids must be unique")

    def job_seed(self, job_id: str) -> int:
        if self.seeds is not None and job_id in self.seeds:
            return int(self.seeds[job_id])
        return derive_seed(self.master_seed, "job", job_id)

    def packages(self) -> list[QmpPackage]:
        return pack(self.circuits, self.pack_size, self.buffer_qubits, self.job_ids)


@dataclass(frozen=True)
class JobRecord:
    job_id: str
    package_id: int
    seed: int
    counts: dict | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        d = {"job_id": self.job_id, "package_id": self.package_id, "seed": self.seed, "counts": self.counts}
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict) -> JobRecord:
        return cls(str(d["job_id"]), int(d["package_id"]), int(d["seed"]), d.get("counts"), d.get("error"))


@dataclass
class CampaignResult(Mapping):
    """job_id -> counts for successful jobs; failures kept in ``errors``."""

    records: dict[str, JobRecord] = field(default_factory=dict)

    def __getitem__(self, job_id: str) -> dict:
        rec = self.records[job_id]
        if not rec.ok:
            raise KeyError(f"job {job_id} failed: {rec.error}")
        return rec.counts

    def __iter__(self) -> Iterator[str]:
        return (j for j, r in self.records.items() if r.ok)

    def __len__(self) -> int:
        return sum(r.ok for r in self.records.values())

    @property
    def errors(self) -> dict[str, str]:
        return {j: r.error for j, r in self.records.items() if not r.ok}


def _interleave(parts: Sequence[Mapping[str, int]], shots: int) -> dict[str, int]:
    """Composite bitstrings from per-member counts (shot k of every member side by side)."""
    columns = []
    for counts in parts:
        col = [bits for bits in sorted(counts) for _ in range(counts[bits])]
        if len(col) != shots:
            raise ValueError("member shot totals differ")
        columns.append(col)
    out: dict[str, int] = {}
    for row in zip(*columns):
        key = "".join(row)
        out[key] = out.get(key, 0) + 1
    return out


def demultiplex(composite_counts: Mapping[str, int], slices: Sequence[slice]) -> list[dict[str, int]]:
    out: list[dict[str, int]] = [{} for _ in slices]
    for bits, c in composite_counts.items():
        for k, s in enumerate(slices):
            sub = bits[s]
            out[k][sub] = out[k].get(sub, 0) + c
    return out


def _crosstalk_circuit(composite: Circuit, package: QmpPackage, strength: float,
                       rng: np.random.Generator) -> Circuit:
    """One random realisation of boundary crosstalk: Z(x)Z after firing gates."""
    neighbour: dict[int, int] = {}
    ranges = package.ranges()
    for left, right in zip(ranges, ranges[1:]):
        a, b = left[-1], left[-1] + 1
        neighbour[a] = b
        c, d = right[0], right[0] - 1
        neighbour[c] = d
    gates: list[Gate] = []
    for g in composite.gates:
        gates.append(g)
        if g.kind in C.TWO_QUBIT_KINDS:
            for q in g.qubits:
                if q in neighbour and rng.random() < strength:
                    gates.append(C.pauli_gate("Z", q))
                    gates.append(C.pauli_gate("Z", neighbour[q]))
    return Circuit(composite.n_qubits, tuple(gates), composite.metadata)


def crosstalk_inject(package: QmpPackage, strength: float, shots: int, seeds: Sequence[int],
                     noise: NoiseModel | None = None, trajectories: int = 64) -> list[dict[str, int]]:
    """Wide-register execution of ``package`` with boundary crosstalk; per-member counts.

    ``seeds`` holds one seed per member. At ``strength == 0`` every member runs
    alone under its own seed, which is exactly unpacked execution.
    """
    if not 0 <= strength < 1:
        raise ValueError(f"crosstalk strength must lie in [0, 1), got {strength}")
    if len(seeds) != len(package.members):
        raise ValueError("one seed per package member")
    if strength == 0:
        solo = SimulatorBackend(noise, trajectories)
        return [solo.run_one(c, shots, s) for (c, _), s in zip(package.members, seeds)]
    seed = derive_seed(0, "package", tuple(int(s) for s in seeds))
    composite = package.composite()
    if not is_decomposed(composite):
        composite = decompose(composite)
    model = noise if noise is not None else NoiseModel()
    targets = composite.measured_qubits
    width = len(targets)
    parts = []
    for k, m in enumerate(_split(shots, max(1, min(trajectories, shots)))):
        if not m:
            continue
        realised = _crosstalk_circuit(composite, package, strength, rng_for(seed, "crosstalk", k))
        if model.has_gate_noise:
            state = TrajectoryRunner(realised, model).run(rng_for(seed, "trajectory", k))
            amps = state.amplitudes
        else:
            amps = simulate(realised.without_measurements()).amplitudes
        probs = marginal_probabilities(amps, composite.n_qubits, targets)
        parts.append(rng_for(seed, "shots", k).choice(probs.size, size=m, p=probs / probs.sum()))
    sample = np.concatenate(parts)
    if model.has_readout_noise:
        sample = _flip_bits(sample, model.readout_for(targets), rng_for(seed, "readout"))
    values, counts = np.unique(sample, return_counts=True)
    wide = {format(int(v), f"0{width}b"): int(c) for v, c in zip(values, counts)}
    return demultiplex(wide, package.bit_slices())


@dataclass(frozen=True)
class _Task:
    package: QmpPackage
    seeds: tuple[int, ...]
    skip: frozenset
    shots: int
    backend: SimulatorBackend
    crosstalk: float


def _run_package(task: _Task) -> list[JobRecord]:
    pkg = task.package
    if task.crosstalk > 0:
        try:
            parts = crosstalk_inject(pkg, task.crosstalk, task.shots, task.seeds, task.backend.noise,
                                     task.backend.trajectories or 64)
        except Exception as exc:  # noqa: BLE001 - reported per job
            msg = f"{type(exc).__name__}: {exc}"
            return [JobRecord(j, pkg.package_id, s, error=msg) for j, s in zip(pkg.job_ids, task.seeds)]
        return [JobRecord(j, pkg.package_id, s, counts=c)
                for j, s, c in zip(pkg.job_ids, task.seeds, parts) if j not in task.skip]

    # crosstalk-free: members are disjoint tensor factors, each sampled under its own seed
    results: list[dict | None] = []
    errors: list[str | None] = []
    for (circ, _), jid, seed in zip(pkg.members, pkg.job_ids, task.seeds):
        if jid in task.skip:
            results.append(None)
            errors.append(None)
            continue
        try:
            results.append(task.backend.run_one(circ, task.shots, seed))
            errors.append(None)
        except Exception as exc:  # noqa: BLE001 - reported per job
            results.append(None)
            errors.append(f"{type(exc).__name__}: {exc}")
    live = [k for k, r in enumerate(results) if r is not None]
    slices = pkg.bit_slices()
    if live:
        wide = _interleave([results[k] for k in live], task.shots)
        widths = [slices[k].stop - slices[k].start for k in live]
        bounds = np.cumsum([0] + widths)
        split = demultiplex(wide, [slice(int(a), int(b)) for a, b in zip(bounds, bounds[1:])])
        for k, counts in zip(live, split):
            results[k] = counts
    out = []
    for k, (jid, seed) in enumerate(zip(pkg.job_ids, task.seeds)):
        if jid in task.skip:
            continue
        out.append(JobRecord(jid, pkg.package_id, seed, counts=results[k], error=errors[k]))
    return out


def read_records(path: str | Path) -> dict[str, JobRecord]:
    path = Path(path)
    records: dict[str, JobRecord] = {}
    if not path.exists():
        return records
    for line in path.read_text().splitlines():
        if line.strip():
            rec = JobRecord.from_dict(json.loads(line))
            records[rec.job_id] = rec
    return records


def run_campaign(spec: CampaignSpec, noise: NoiseModel | None = None, *, crosstalk: float = 0.0,
                 records_path: str | Path | None = None, backend: SimulatorBackend | None = None,
                 trajectories: int | None = 64) -> CampaignResult:
    """Execute every job of ``spec``; a pure function of (spec, noise, crosstalk).

    With ``records_path`` each finished job is appended as one JSON line, and
    jobs already recorded successfully there are skipped.
    """
    if not 0 <= crosstalk < 1:
        raise ValueError(f"crosstalk strength must lie in [0, 1), got {crosstalk}")
    backend = backend or SimulatorBackend(noise, trajectories=trajectories)
    done = {j: r for j, r in read_records(records_path).items() if r.ok} if records_path else {}
    tasks = []
    for pkg in spec.packages():
        if all(j in done for j in pkg.job_ids):
            continue
        seeds = tuple(spec.job_seed(j) for j in pkg.job_ids)
        tasks.append(_Task(pkg, seeds, frozenset(j for j in pkg.job_ids if j in done), spec.shots,
                           backend, crosstalk))
    result = CampaignResult(dict(done))
    sink = open(records_path, "a") if records_path else None
    try:
        for records in _map(tasks, spec.worker_count):
            for rec in records:
                result.records[rec.job_id] = rec
                if sink is not None:
                    sink.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
            if sink is not None:
                sink.flush()
    finally:
        if sink is not None:
            sink.close()
    # report in job order regardless of completion order
    order = {j: i for i, j in enumerate(spec.job_ids)}
    result.records = dict(sorted(result.records.items(), key=lambda kv: order.get(kv[0], len(order))))
    return result


def _map(tasks: Sequence[_Task], workers: int) -> Iterable[list[JobRecord]]:
    if workers <= 1 or len(tasks) <= 1:
        return map(_run_package, tasks)
    chunk = max(1, len(tasks) // (workers * 4))
    pool = ProcessPoolExecutor(max_workers=workers)

    def gen():
        with pool:
            yield from pool.map(_run_package, tasks, chunksize=chunk)

    return gen()


class ExecutorBackend:
    """Backend adapter that routes protocol batches through ``run_campaign``."""

    def __init__(self, noise: NoiseModel | None = None, pack_size: int = 5, buffer_qubits: int = 1,
                 worker_count: int = 1, trajectories: int | None = 64, exact_trajectories: int = 256,
                 crosstalk: float = 0.0):
        self.simulator = SimulatorBackend(noise, trajectories, exact_trajectories)
        self.noise = self.simulator.noise
        self.pack_size = pack_size
        self.buffer_qubits = buffer_qubits
        self.worker_count = worker_count
        self.crosstalk = crosstalk
        self.circuits_run = 0

    def run_one(self, circuit: Circuit, shots: int, seed: int) -> dict[str, int]:
        return self.run([circuit], shots, [seed])[0]

    def run(self, circuits: Sequence[Circuit], shots: int, seeds: Sequence[int]) -> list[dict[str, int]]:
        if len(circuits) != len(seeds):
            raise ValueError("need one seed per circuit")
        ids = [str(i) for i in range(len(circuits))]
        spec = CampaignSpec(list(circuits), shots, ids, self.pack_size, self.buffer_qubits,
                            worker_count=self.worker_count, seeds=dict(zip(ids, seeds)))
        result = run_campaign(spec, crosstalk=self.crosstalk, backend=self.simulator)
        if result.errors:
            first = next(iter(result.errors.items()))
            raise RuntimeError(f"{len(result.errors)} job(s) failed; job {first[0]}: {first[1]}")
        self.circuits_run += len(circuits)
        return [result[j] for j in ids]

    def probabilities(self, circuits: Sequence[Circuit], seed: int = 0) -> list[dict[str, float]]:
        return self.simulator.probabilities(circuits, seed)
