"""Compiled trajectory kernel for decomposed circuits.

A circuit is lowered to flat arrays (opcode, qubits, 2x2 matrix per gate) and
one trajectory runs inside a single numba call. Noise draws are made by the
caller, so the compiled path and the numpy reference consume identical
randomness.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import circuit as C
from .circuit import Circuit

OP_1Q = 0
OP_CX = 1
OP_CZ = 2

_PAULIS = np.array([C.PAULI_MATRICES[k] for k in "IXYZ"])


def lower(circuit: Circuit) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(ops, qubits[G, 2], mats[G, 2, 2]) for the non-measurement gates."""
    gates = [g for g in circuit.gates if g.kind != C.MEASURE]
    ops = np.empty(len(gates), dtype=np.int64)
    qubits = np.zeros((len(gates), 2), dtype=np.int64)
    mats = np.zeros((len(gates), 2, 2), dtype=np.complex128)
    for i, g in enumerate(gates):
        if g.kind == C.UNITARY:
            ops[i] = OP_1Q
            mats[i] = g.unitary
        elif g.kind == C.HADAMARD:
            ops[i] = OP_1Q
            mats[i] = C.H_MATRIX
        elif g.kind == C.CX:
            ops[i] = OP_CX
        elif g.kind == C.CZ:
            ops[i] = OP_CZ
        else:
            raise ValueError(f"gate kind {g.kind!r} is not a physical gate")
        qubits[i, : len(g.qubits)] = g.qubits
    return ops, qubits, mats


@njit(cache=True)
def _k_1q(psi, n, m, q):
    stride = 1 << (n - 1 - q)
    for i in range(psi.size):
        if i & stride:
            continue
        a0 = psi[i]
        a1 = psi[i | stride]
        psi[i] = m[0, 0] * a0 + m[0, 1] * a1
        psi[i | stride] = m[1, 0] * a0 + m[1, 1] * a1


@njit(cache=True)
def _k_cx(psi, n, c, t):
    sc = 1 << (n - 1 - c)
    st = 1 << (n - 1 - t)
    for i in range(psi.size):
        if (i & sc) and not (i & st):
            j = i | st
            tmp = psi[i]
            psi[i] = psi[j]
            psi[j] = tmp


@njit(cache=True)
def _k_cz(psi, n, a, b):
    sa = 1 << (n - 1 - a)
    sb = 1 << (n - 1 - b)
    for i in range(psi.size):
        if (i & sa) and (i & sb):
            psi[i] = -psi[i]


@njit(cache=True)
def _k_zz(psi, n, a, b, ph_even, ph_odd):
    sa = 1 << (n - 1 - a)
    sb = 1 << (n - 1 - b)
    for i in range(psi.size):
        if ((i & sa) != 0) == ((i & sb) != 0):
            psi[i] *= ph_even
        else:
            psi[i] *= ph_odd


@njit(cache=True)
def run_trajectory(psi, n, ops, qubits, mats, paulis, u, k2, k1, p2, p1, eps):
    """Apply the lowered circuit to ``psi`` in place with pre-drawn noise.

    u[i] triggers an error after gate i; k2[i] in 1..15 picks the two-qubit Pauli
    (high two bits on the first qubit), k1[i] in 1..3 the single-qubit one.
    """
    ph_even = np.exp(-1j * eps)
    ph_odd = np.exp(1j * eps)
    for i in range(ops.size):
        op = ops[i]
        if op == 0:
            q = qubits[i, 0]
            _k_1q(psi, n, mats[i], q)
            if u[i] < p1:
                _k_1q(psi, n, paulis[k1[i]], q)
        else:
            a = qubits[i, 0]
            b = qubits[i, 1]
            if op == 1:
                _k_cx(psi, n, a, b)
            else:
                _k_cz(psi, n, a, b)
            if eps != 0.0:
                _k_zz(psi, n, a, b, ph_even, ph_odd)
            if u[i] < p2:
                ka = k2[i] >> 2
                kb = k2[i] & 3
                if ka:
                    _k_1q(psi, n, paulis[ka], a)
                if kb:
                    _k_1q(psi, n, paulis[kb], b)
