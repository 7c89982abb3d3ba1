"""Experiment configuration, the end-to-end driver, and its output files.

A config is one JSON object; every key is optional and defaults to the
reference experiment: six Majoranas with quartic couplings (three qubits),
Trotter step 2.0 at t = 2, 4, ..., 10, left subsystems {0} and {0, 1},
150 random unitaries for the randomized-measurement protocol, packages of five
circuits per execution.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from .circuit import Circuit
from .executor import ExecutorBackend
from .mitigation import MitigationConfig, mitigated_randomized_measurement, mitigated_swap_mbi
from .noise import NoiseModel
from .oracle import exact_evolve, reduced_density_matrix, renyi_entropy, von_neumann_entropy
from .protocols import (
    RM,
    SWAP_MBI,
    EntropyEstimate,
    RandomizedMeasurementJob,
    SwapMbiJob,
    build_swap_test_circuit,
    run_randomized_measurement,
    run_swap_mbi,
)
from .seeding import derive_seed
from .statevector import Statevector, simulate
from .syk import SykHamiltonian, SykParams, build_hamiltonian
from .trotter import TrotterPlan, build_trotter_circuit, count_gates, decompose

PROTOCOLS = (SWAP_MBI, RM)
INITIAL_STATE = "all-zeros product state"

COLUMNS = (
    "t", "L", "protocol", "purity", "S2", "std_error", "S2_exact", "S2_exact_trotter",
    "n_unitaries", "shots", "noise_label", "mitigation_label",
    # appended after the reference columns
    "subsystem", "SvN_exact", "defined",
)

_STEP_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending line."""


@dataclass(frozen=True)
class RmSettings:
    n_unitaries: int = 150
    shots_per_unitary: int = 1024


@dataclass(frozen=True)
class ExecutorSettings:
    pack_size: int = 5
    worker_count: int = 1
    buffer_qubits: int = 1
    trajectories: int = 64


@dataclass(frozen=True)
class ExperimentConfig:
    syk: SykParams = field(default_factory=SykParams)
    times: tuple[float, ...] = (2.0, 4.0, 6.0, 8.0, 10.0)
    trotter_dt: float = 2.0
    subsystems: tuple[tuple[int, ...], ...] = ((0,), (0, 1))
    protocol: str = "both"
    shots: int = 10000
    rm: RmSettings = field(default_factory=RmSettings)
    noise: NoiseModel | None = None
    mitigation: MitigationConfig | None = None
    executor: ExecutorSettings = field(default_factory=ExecutorSettings)
    output_dir: str = "results"
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "subsystems", tuple(tuple(int(q) for q in s) for s in self.subsystems))
        if not self.times:
            raise ValueError("times: need at least one time point")
        if not self.trotter_dt > 0:
            raise ValueError(f"trotter_dt: must be positive, got {self.trotter_dt}")
        for t in self.times:
            if t < 0 or not math.isfinite(t):
                raise ValueError(f"times: {t} is not a nonnegative finite time")
            if abs(t / self.trotter_dt - round(t / self.trotter_dt)) > _STEP_TOL:
                raise ValueError(f"times: {t} is not a multiple of trotter_dt={self.trotter_dt}")
        n = self.syk.n_qubits
        if not self.subsystems:
            raise ValueError("subsystems: need at least one subsystem")
        for s in self.subsystems:
            if not s or len(set(s)) != len(s) or any(not 0 <= q < n for q in s):
                raise ValueError(f"subsystems: {list(s)} is not a set of qubits in 0..{n - 1}")
            if len(s) >= n:
                raise ValueError(f"subsystems: {list(s)} must be a proper subset of the {n} qubits")
        if self.protocol not in (*PROTOCOLS, "both"):
            raise ValueError(f"protocol: expected swap_mbi, rm or both, got {self.protocol!r}")
        if self.shots < 1:
            raise ValueError(f"shots: must be positive, got {self.shots}")
        if self.rm.n_unitaries < 1 or self.rm.shots_per_unitary < 1:
            raise ValueError("rm: n_unitaries and shots_per_unitary must be positive")
        ex = self.executor
        if ex.pack_size < 1 or ex.worker_count < 1 or ex.buffer_qubits < 0 or ex.trajectories < 1:
            raise ValueError("executor: pack_size, worker_count, trajectories must be positive, buffer_qubits nonnegative")
        if self.mitigation is not None and self.noise is None:
            raise ValueError("mitigation: requires a noise model")

    @property
    def protocols(self) -> tuple[str, ...]:
        return PROTOCOLS if self.protocol == "both" else (self.protocol,)

    def steps(self, t: float) -> int:
        return int(round(t / self.trotter_dt))

    def noise_settings(self) -> list[str]:
        """Row groups: noiseless, then noisy raw and (with mitigation) mitigated."""
        if self.noise is None:
            return ["ideal"]
        out = ["ideal", "noisy"]
        if self.mitigation is not None:
            out.append("mitigated")
        return out

    def to_dict(self) -> dict:
        return {
            "syk": asdict(self.syk),
            "times": list(self.times),
            "trotter_dt": self.trotter_dt,
            "subsystems": [list(s) for s in self.subsystems],
            "protocol": self.protocol,
            "shots": self.shots,
            "rm": asdict(self.rm),
            "noise": None if self.noise is None else self.noise.to_dict(),
            "mitigation": None if self.mitigation is None else self.mitigation.to_dict(),
            "executor": asdict(self.executor),
            "output_dir": self.output_dir,
            "master_seed": self.master_seed,
            "initial_state": INITIAL_STATE,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        data.pop("initial_state", None)
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"{unknown[0]}: unknown key")
        kwargs: dict[str, Any] = {}
        for key, value in data.items():
            try:
                kwargs[key] = _coerce(key, value)
            except (TypeError, ValueError) as exc:
                msg = str(exc)
                raise ValueError(msg if msg.startswith(f"{key}:") else f"{key}: {msg}") from None
        return cls(**kwargs)


_NESTED = {"syk": SykParams, "rm": RmSettings, "executor": ExecutorSettings}


def _coerce(key: str, value):
    if key in _NESTED:
        if not isinstance(value, dict):
            raise ValueError("expected an object")
        kind = _NESTED[key]
        extra = sorted(set(value) - set(kind.__dataclass_fields__))
        if extra:
            raise ValueError(f"unknown field {extra[0]!r}")
        return kind(**value)
    if key == "noise":
        return None if value is None else NoiseModel.from_dict(value)
    if key == "mitigation":
        if value is None:
            return None
        return MitigationConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in value.items()})
    if key in ("times", "subsystems"):
        if not isinstance(value, list):
            raise ValueError("expected a list")
        return value
    if key in ("shots", "master_seed") and not isinstance(value, int):
        raise ValueError(f"expected an integer, got {value!r}")
    return value


def _line_of(text: str, key: str) -> int | None:
    pattern = re.compile(r'"' + re.escape(key) + r'"\s*:')
    for i, line in enumerate(text.splitlines(), 1):
        if pattern.search(line):
            return i
    return None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse JSON text; errors carry ``source:line``."""
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be a JSON object")
    try:
        return ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        key = msg.split(":", 1)[0].strip()
        line = _line_of(text, key) or 1
        raise ConfigError(f"{source}:{line}: {msg}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


# --- driver -----------------------------------------------------------------


@dataclass(frozen=True)
class ResultRow:
    t: float
    subsystem: tuple[int, ...]
    protocol: str
    estimate: EntropyEstimate
    s2_exact: float
    s2_exact_trotter: float
    svn_exact: float
    n_unitaries: int | str
    shots: int
    noise_label: str
    mitigation_label: str

    def as_record(self) -> dict:
        est = self.estimate
        return {
            "t": self.t,
            "L": len(self.subsystem),
            "protocol": self.protocol,
            "purity": est.purity,
            "S2": est.renyi2,
            "std_error": est.std_error,
            "S2_exact": self.s2_exact,
            "S2_exact_trotter": self.s2_exact_trotter,
            "n_unitaries": self.n_unitaries,
            "shots": self.shots,
            "noise_label": self.noise_label,
            "mitigation_label": self.mitigation_label,
            "subsystem": "-".join(str(q) for q in self.subsystem),
            "SvN_exact": self.svn_exact,
            "defined": est.defined,
        }


@dataclass
class ResultSet:
    config: ExperimentConfig
    rows: list[ResultRow] = field(default_factory=list)
    gate_counts: dict = field(default_factory=dict)


def trotter_circuit(h: SykHamiltonian, t: float, r: int) -> Circuit:
    if r == 0:
        return Circuit(h.n_qubits, (), {"t": t, "trotter_steps": 0, "dt": 0.0, "step_bounds": []})
    return build_trotter_circuit(TrotterPlan(h, t, r))


@dataclass(frozen=True)
class OracleValues:
    t: float
    subsystem: tuple[int, ...]
    s2_exact: float
    s2_exact_trotter: float
    svn_exact: float
    svn_exact_trotter: float


def oracle_curves(config: ExperimentConfig, h: SykHamiltonian | None = None) -> list[OracleValues]:
    """Exact and exact-Trotterized entropies for every (t, subsystem)."""
    h = h or build_hamiltonian(config.syk)
    start = Statevector.zero(h.n_qubits)
    out = []
    for t in config.times:
        exact = exact_evolve(h, start, t)
        trot = simulate(trotter_circuit(h, t, config.steps(t)))
        for s in config.subsystems:
            rho_e = reduced_density_matrix(exact, list(s))
            rho_t = reduced_density_matrix(trot, list(s))
            out.append(OracleValues(t, s, renyi_entropy(rho_e), renyi_entropy(rho_t),
                                    von_neumann_entropy(rho_e), von_neumann_entropy(rho_t)))
    return out


def gate_count_report(config: ExperimentConfig, h: SykHamiltonian | None = None) -> dict:
    """Physical gate counts of every Trotter circuit and its swap-test wrapper."""
    h = h or build_hamiltonian(config.syk)
    report = {}
    for t in config.times:
        r = config.steps(t)
        base = trotter_circuit(h, t, r)
        entry = {"trotter_steps": r, "state_preparation": count_gates(decompose(base)).to_dict()}
        if SWAP_MBI in config.protocols:
            entry["swap_test"] = {
                "-".join(map(str, s)): count_gates(decompose(build_swap_test_circuit(SwapMbiJob(base, s)))).to_dict()
                for s in config.subsystems
            }
        report[_fmt(t)] = entry
    mit = config.mitigation
    report["circuits_per_time_point"] = {
        "rm": config.rm.n_unitaries * (mit.circuits_per_logical if mit else 1),
        "swap_mbi_per_subsystem": mit.circuits_per_logical if mit else 1,
    }
    return report


def _backend(config: ExperimentConfig, noisy: bool) -> ExecutorBackend:
    ex = config.executor
    return ExecutorBackend(config.noise if noisy else None, ex.pack_size, ex.buffer_qubits, ex.worker_count,
                           trajectories=ex.trajectories)


def run_experiment(config: ExperimentConfig) -> ResultSet:
    h = build_hamiltonian(config.syk)
    oracle = {(o.t, o.subsystem): o for o in oracle_curves(config, h)}
    results = ResultSet(config, gate_counts=gate_count_report(config, h))
    settings = config.noise_settings()
    noise_label = config.noise.label() if config.noise is not None else "none"
    mit_label = config.mitigation.label() if config.mitigation is not None else "none"
    ideal = _backend(config, noisy=False)
    noisy = _backend(config, noisy=True) if config.noise is not None else None
    for t in config.times:
        base = trotter_circuit(h, t, config.steps(t))
        for s in config.subsystems:
            o = oracle[(t, s)]
            for protocol in config.protocols:
                seed = derive_seed(config.master_seed, protocol, _fmt(t), s)
                estimates = _run_protocol(config, protocol, base, s, seed, ideal, noisy)
                n_u = config.rm.n_unitaries if protocol == RM else ""
                shots = config.rm.shots_per_unitary if protocol == RM else config.shots
                for setting in settings:
                    results.rows.append(ResultRow(
                        t, s, protocol, estimates[setting], o.s2_exact, o.s2_exact_trotter, o.svn_exact,
                        n_u, shots,
                        "none" if setting == "ideal" else noise_label,
                        mit_label if setting == "mitigated" else "none",
                    ))
    return results


def _run_protocol(config: ExperimentConfig, protocol: str, base: Circuit, subsystem: tuple[int, ...],
                  seed: int, ideal: ExecutorBackend, noisy: ExecutorBackend | None) -> dict[str, EntropyEstimate]:
    out: dict[str, EntropyEstimate] = {}
    if protocol == SWAP_MBI:
        job = SwapMbiJob(base, subsystem, config.shots)
        out["ideal"] = run_swap_mbi(job, ideal, seed=seed)
        if noisy is not None:
            if config.mitigation is not None:
                res = mitigated_swap_mbi(job, noisy, config.mitigation, config.noise, seed=seed)
                out["noisy"], out["mitigated"] = res.raw, res.mitigated
            else:
                out["noisy"] = run_swap_mbi(job, noisy, seed=seed)
    else:
        job = RandomizedMeasurementJob(base, subsystem, config.rm.n_unitaries, config.rm.shots_per_unitary, seed)
        out["ideal"] = run_randomized_measurement(job, ideal)
        if noisy is not None:
            if config.mitigation is not None:
                res = mitigated_randomized_measurement(job, noisy, config.mitigation, config.noise)
                out["noisy"], out["mitigated"] = res.raw, res.mitigated
            else:
                out["noisy"] = run_randomized_measurement(job, noisy)
    return out


# --- output -----------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if value.is_integer() and abs(value) < 1e15:
            return str(int(value))
        return repr(value)
    return str(value)


def results_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        rec = row.as_record()
        writer.writerow([_fmt(rec[c]) for c in COLUMNS])
    return buf.getvalue()


def oracle_csv(values: Sequence[OracleValues]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "L", "subsystem", "S2_exact", "S2_exact_trotter", "SvN_exact", "SvN_exact_trotter"])
    for o in values:
        writer.writerow([_fmt(o.t), len(o.subsystem), "-".join(map(str, o.subsystem)), _fmt(o.s2_exact),
                         _fmt(o.s2_exact_trotter), _fmt(o.svn_exact), _fmt(o.svn_exact_trotter)])
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit_results(results: ResultSet, output_dir: str | Path) -> dict[str, Path]:
    if not results.rows:
        raise ValueError("no results to emit")
    out = Path(output_dir)
    return {
        "results": _write(out / "results.csv", results_csv(results.rows)),
        "config": _write(out / "config.resolved.json", results.config.to_json()),
        "gate_counts": _write(out / "gate_counts.json", json.dumps(results.gate_counts, indent=2, sort_keys=True) + "\n"),
    }


def with_overrides(config: ExperimentConfig, seed: int | None = None, output_dir: str | None = None,
                   workers: int | None = None) -> ExperimentConfig:
    if seed is not None:
        config = replace(config, master_seed=seed)
    if output_dir is not None:
        config = replace(config, output_dir=output_dir)
    if workers is not None:
        if workers < 1:
            raise ValueError(f"workers: must be positive, got {workers}")
        config = replace(config, executor=replace(config.executor, worker_count=workers))
    return config
