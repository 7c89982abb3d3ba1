from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sykent import circuit as C
from sykent.circuit import Circuit, Gate
from sykent.pauli import PauliString


@st.composite
def circuits(draw, max_qubits=4, max_gates=12):
    n = draw(st.integers(2, max_qubits))
    gates = []
    for _ in range(draw(st.integers(0, max_gates))):
        kind = draw(st.sampled_from(["u", "h", "cx", "cz", "rot", "cswap"]))
        qs = draw(st.permutations(range(n)))
        if kind == "u":
            a, b = draw(st.floats(-3, 3)), draw(st.floats(-3, 3))
            m = np.array([[np.cos(a), -np.exp(1j * b) * np.sin(a)], [np.exp(-1j * b) * np.sin(a), np.cos(a)]])
            gates.append(C.unitary(m, qs[0]))
        elif kind == "h":
            gates.append(C.h(qs[0]))
        elif kind == "cx":
            gates.append(C.cx(qs[0], qs[1]))
        elif kind == "cz":
            gates.append(C.cz(qs[0], qs[1]))
        elif kind == "rot":
            label = draw(st.text(alphabet="IXYZ", min_size=n, max_size=n).filter(lambda s: set(s) != {"I"}))
            sign = draw(st.sampled_from("+-"))
            gates.append(C.pauli_rotation(PauliString.from_label(sign + label), draw(st.floats(-3, 3))))
        elif n >= 3:
            gates.append(C.cswap(qs[0], qs[1], qs[2]))
    return Circuit(n, tuple(gates), {"tag": "test"})


@settings(max_examples=50, deadline=None)
@given(circuits())
def test_json_round_trip(circ):
    back = Circuit.from_json(circ.to_json())
    assert back == circ
    assert back.metadata == circ.metadata


def test_save_load(tmp_path):
    circ = Circuit(2, (C.h(0), C.cx(0, 1))).measure([0, 1])
    path = tmp_path / "c.json"
    circ.save(path)
    assert Circuit.load(path) == circ


def test_pauli_rotation_support_is_qubits():
    g = C.pauli_rotation(PauliString.from_label("XIZ"), 0.3)
    assert g.qubits == (0, 2)


@pytest.mark.parametrize(
    "factory",
    [
        lambda: Gate("nope", (0,)),
        lambda: C.cx(0, 0),
        lambda: Gate(C.CX, (0,)),
        lambda: C.unitary(np.array([[1, 1], [0, 1]]), 0),
        lambda: C.pauli_rotation(PauliString.from_label("iX"), 0.1),
        lambda: Circuit(2, (C.cx(0, 2),)),
        lambda: Circuit(2, (C.measure([0]), C.h(0))),
        lambda: Circuit(2, (C.measure([0]), C.measure([0]))),
    ],
)
def test_invalid_construction(factory):
    with pytest.raises(ValueError):
        factory()


def test_inverse_reverses_and_daggers():
    circ = Circuit(2, (C.rz(0.4, 0), C.cx(0, 1), C.pauli_rotation(PauliString.from_label("XY"), 0.2)))
    inv = circ.inverse()
    assert inv.gates[0].theta == pytest.approx(-0.2)
    assert inv.gates[1] == C.cx(0, 1)
    np.testing.assert_allclose(inv.gates[2].unitary, circ.gates[0].unitary.conj().T)
    assert inv.gates[2].label == "rz_dg"
    assert inv.inverse() == circ


def test_inverse_rejects_measurements():
    with pytest.raises(ValueError):
        Circuit(1, (C.h(0),)).measure([0]).inverse()


def test_embedded_shifts_qubits_and_widens_paulis():
    circ = Circuit(2, (C.cx(0, 1), C.pauli_rotation(PauliString.from_label("ZX"), 0.1)))
    wide = circ.embedded(3, 6)
    assert wide.gates[0].qubits == (3, 4)
    assert wide.gates[1].pauli.label() == "+IIIZXI"
    with pytest.raises(ValueError):
        circ.embedded(5, 6)


def test_measured_qubits_order():
    circ = Circuit(3, (C.h(0),)).measure([2, 0])
    assert circ.measured_qubits == (2, 0)
    assert circ.classical_bits == 2
    assert circ.without_measurements().measured_qubits == ()
