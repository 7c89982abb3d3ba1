"""First-order Trotter circuits, basis-gate decomposition and gate accounting.

Depth convention: every gate (single-qubit included, measurements excluded)
occupies one layer on each qubit it touches; depth is the longest such chain.
Trotter circuits record their step boundaries in metadata and their depth is
the sum of per-step depths, i.e. steps are separated by barriers.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import circuit as C
from .circuit import Circuit, Gate
from .oracle import exact_evolve, state_distance
from .pauli import PauliString
from .statevector import Statevector, simulate
from .syk import SykHamiltonian

_SDG = np.diag([1, -1j])
_S = np.diag([1, 1j])
_T = np.diag([1, cmath.exp(0.25j * math.pi)])
_TDG = _T.conj()


@dataclass(frozen=True)
class TrotterPlan:
    hamiltonian: SykHamiltonian
    t: float
    r: int
    term_order: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"Trotter steps must be positive, got {self.r}")
        if not math.isfinite(self.t / self.r):
            raise ValueError("time step t/r is not finite")
        n = len(self.hamiltonian.terms)
        order = tuple(range(n)) if self.term_order is None else tuple(self.term_order)
        if sorted(order) != list(range(n)):
            raise ValueError(f"term_order is not a permutation of 0..{n - 1}")
        object.__setattr__(self, "term_order", order)

    @property
    def dt(self) -> float:
        return self.t / self.r


@dataclass(frozen=True)
class GateCountReport:
    depth: int
    two_qubit_gates: int
    single_qubit_gates: int
    per_step_depth: int
    other_gates: int = 0
    steps: int = 1
    by_kind: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "two_qubit_gates": self.two_qubit_gates,
            "single_qubit_gates": self.single_qubit_gates,
            "other_gates": self.other_gates,
            "per_step_depth": self.per_step_depth,
            "steps": self.steps,
            "by_kind": dict(sorted(self.by_kind.items())),
        }


def decompose_pauli_rotation(p: PauliString, theta: float) -> list[Gate]:
    """exp(-i theta P) as basis change, CX ladder, Rz, and un-computation.

    X factors use H, Y factors use S^dagger then H, so that the conjugated
    operator is a Z string; the ladder folds its parity onto the last support
    qubit. A weight-w rotation costs 2(w-1) CX gates.
    """
    if not p.is_hermitian:
        raise ValueError("rotation generator must be Hermitian")
    support = p.support
    if not support:
        return []  # global phase
    angle = 2 * theta if p.phase == 0 else -2 * theta
    pre: list[Gate] = []
    post: list[Gate] = []
    for q in support:
        x, z = p.x_at(q), p.z_at(q)
        if x and not z:
            pre.append(C.h(q))
            post.append(C.h(q))
        elif x and z:
            pre.extend([C.unitary(_SDG, q, "sdg"), C.h(q)])
            post.extend([C.h(q), C.unitary(_S, q, "s")])
    ladder = [C.cx(a, b) for a, b in zip(support[:-1], support[1:])]
    return pre + ladder + [C.rz(angle, support[-1])] + ladder[::-1] + post


def toffoli(c1: int, c2: int, t: int) -> list[Gate]:
    """CCX in the 6-CX Clifford+T form."""
    T = lambda q: C.unitary(_T, q, "t")  # noqa: E731
    Tdg = lambda q: C.unitary(_TDG, q, "tdg")  # noqa: E731
    return [
        C.h(t), C.cx(c2, t), Tdg(t), C.cx(c1, t), T(t), C.cx(c2, t), Tdg(t), C.cx(c1, t),
        T(c2), T(t), C.h(t), C.cx(c1, c2), T(c1), Tdg(c2), C.cx(c1, c2),
    ]


def decompose_cswap(control: int, a: int, b: int) -> list[Gate]:
    return [C.cx(b, a)] + toffoli(control, a, b) + [C.cx(b, a)]


def decompose_gate(g: Gate) -> list[Gate]:
    if g.kind == C.PAULI_ROTATION:
        return decompose_pauli_rotation(g.pauli, g.theta)
    if g.kind == C.CSWAP:
        return decompose_cswap(*g.qubits)
    return [g]


def decompose(circuit: Circuit) -> Circuit:
    """Rewrite composite gates so only 1-qubit gates, CX/CZ and measurements remain."""
    gates: list[Gate] = []
    bounds = []
    old_bounds = set(circuit.metadata.get("step_bounds", ()))
    for i, g in enumerate(circuit.gates):
        if i in old_bounds:
            bounds.append(len(gates))
        gates.extend(decompose_gate(g))
    meta = dict(circuit.metadata, decomposed=True)
    if old_bounds:
        meta["step_bounds"] = bounds
    return Circuit(circuit.n_qubits, tuple(gates), meta)


def is_decomposed(circuit: Circuit) -> bool:
    return all(g.kind not in (C.PAULI_ROTATION, C.CSWAP) for g in circuit.gates)


def build_trotter_circuit(plan: TrotterPlan, decomposed: bool = False) -> Circuit:
    """(prod_n exp(-i a_n P_n dt))^r in ``plan.term_order``."""
    h = plan.hamiltonian
    step: list[Gate] = []
    for k in plan.term_order:
        a, p = h.terms[k]
        theta = a * plan.dt
        if decomposed:
            step.extend(decompose_pauli_rotation(p, theta))
        else:
            step.append(C.pauli_rotation(p, theta))
    gates = step * plan.r
    meta = {
        "t": plan.t,
        "trotter_steps": plan.r,
        "dt": plan.dt,
        "decomposed": decomposed,
        "step_bounds": [i * len(step) for i in range(plan.r)],
    }
    return Circuit(h.n_qubits, tuple(gates), meta)


def circuit_depth(gates: Sequence[Gate], n_qubits: int) -> int:
    level = [0] * n_qubits
    for g in gates:
        if g.kind == C.MEASURE:
            continue
        d = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = d
    return max(level, default=0)


def count_gates(circuit: Circuit) -> GateCountReport:
    gates = [g for g in circuit.gates if g.kind != C.MEASURE]
    bounds = list(circuit.metadata.get("step_bounds", ())) or [0]
    segments = [circuit.gates[a:b] for a, b in zip(bounds, bounds[1:] + [len(circuit.gates)])]
    depths = [circuit_depth(s, circuit.n_qubits) for s in segments]
    by_kind: dict[str, int] = {}
    for g in gates:
        key = g.label or g.kind
        by_kind[key] = by_kind.get(key, 0) + 1
    return GateCountReport(
        depth=sum(depths),
        two_qubit_gates=sum(g.arity == 2 for g in gates),
        single_qubit_gates=sum(g.arity == 1 for g in gates),
        other_gates=sum(g.arity > 2 for g in gates),
        per_step_depth=depths[0] if depths else 0,
        steps=len(segments),
        by_kind=by_kind,
    )


def trotter_state(h: SykHamiltonian, t: float, r: int, initial: Statevector | None = None,
                  term_order: Sequence[int] | None = None) -> Statevector:
    plan = TrotterPlan(h, t, r, None if term_order is None else tuple(term_order))
    return simulate(build_trotter_circuit(plan), initial)


def trotter_error(plan: TrotterPlan, initial: Statevector | None = None) -> float:
    """2-norm distance between the Trotterized and exactly evolved states."""
    if initial is None:
        initial = Statevector.zero(plan.hamiltonian.n_qubits)
    approx = simulate(build_trotter_circuit(plan), initial)
    exact = exact_evolve(plan.hamiltonian, initial, plan.t)
    return state_distance(approx, exact)
