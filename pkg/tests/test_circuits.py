import json
import math

import numpy as np
import pytest

from qemlab.circuits import (
    CX_TWIRL_TABLE,
    Circuit,
    GateOp,
    PauliObservable,
    append_measurement_basis,
    fold_two_qubit_gates,
    h_ops,
    is_clifford,
    pauli_twirl,
    two_qubit_depth,
    weight_one,
)
from qemlab.generators import TfimParams, random_circuit, trotter_tfim
from qemlab.sim import PAULI_MATS, expectation, simulate


def random_test_circuit(n, n_ops, seed):
    rng = np.random.default_rng(seed)
    ops = []
    for _ in range(n_ops):
        kind = rng.integers(0, 4)
        q = int(rng.integers(0, n))
        if kind == 0:
            ops.append(GateOp("x", (q,)))
        elif kind == 1:
            ops.append(GateOp("sx", (q,)))
        elif kind == 2:
            ops.append(GateOp("rz", (q,), (float(rng.uniform(0, 2 * math.pi)),)))
        else:
            a, b = rng.choice(n, size=2, replace=False)
            ops.append(GateOp("cx", (int(a), int(b))))
    return Circuit(n, ops)


def observables(n):
    out = [weight_one(n, q, letter) for q in range(n) for letter in "XYZ"]
    out.append(PauliObservable("Z" * n))
    return out


class TestGateOp:
    def test_validation(self):
        with pytest.raises(ValueError):
            GateOp("h", (0,))
        with pytest.raises(ValueError):
            GateOp("cx", (0,))
        with pytest.raises(ValueError):
            GateOp("cx", (1, 1))
        with pytest.raises(ValueError):
            GateOp("rz", (0,))
        with pytest.raises(ValueError):
            GateOp("x", (0,), (0.1,))

    def test_circuit_qubit_range(self):
        with pytest.raises(ValueError):
            Circuit(2, [GateOp("x", (2,))])


class TestDepth:
    def test_empty_circuit(self):
        assert two_qubit_depth(Circuit(3)) == 0

    def test_tfim_step_has_four_cx_layers(self):
        circ = trotter_tfim(TfimParams(4, 1, 0.3, 0.5))
        assert two_qubit_depth(circ) == 4

    def test_parallel_pairs_share_a_layer(self):
        circ = Circuit(4, [GateOp("cx", (0, 1)), GateOp("cx", (2, 3))])
        assert two_qubit_depth(circ) == 1

    def test_single_qubit_gates_ignored(self):
        circ = Circuit(2, [GateOp("x", (0,)), GateOp("cx", (0, 1)), GateOp("sx", (1,))])
        assert two_qubit_depth(circ) == 1


class TestFolding:
    def test_factor_one_is_identity(self):
        circ = random_test_circuit(3, 15, 0)
        assert fold_two_qubit_gates(circ, 1).ops == circ.ops

    def test_cx_count_scales(self):
        circ = trotter_tfim(TfimParams(4, 1, 0.2, 0.4))
        assert circ.count("cx") == 6
        assert fold_two_qubit_gates(circ, 3).count("cx") == 18

    def test_even_factor_rejected(self):
        circ = random_test_circuit(2, 5, 1)
        with pytest.raises(ValueError):
            fold_two_qubit_gates(circ, 2)
        with pytest.raises(ValueError):
            fold_two_qubit_gates(circ, 0)

    def test_serial_depth_scales(self):
        circ = Circuit(2, [GateOp("cx", (0, 1))] * 4)
        assert two_qubit_depth(fold_two_qubit_gates(circ, 3)) == 12

    def test_noiseless_expectations_invariant(self):
        for seed in range(5):
            circ = random_test_circuit(3, 20, seed)
            base = simulate(circ)
            for factor in (3, 5):
                folded = simulate(fold_two_qubit_gates(circ, factor))
                for obs in observables(3):
                    assert expectation(folded, obs) == pytest.approx(
                        expectation(base, obs), abs=1e-10
                    )


class TestTwirl:
    def test_table_entries_reproduce_cx(self):
        cx = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
        for (pc, pt), (qc, qt) in CX_TWIRL_TABLE.items():
            pre = np.kron(PAULI_MATS[pc], PAULI_MATS[pt])
            post = np.kron(PAULI_MATS[qc], PAULI_MATS[qt])
            dressed = post @ cx @ pre
            # equal up to global phase
            idx = np.unravel_index(np.argmax(np.abs(cx)), cx.shape)
            phase = dressed[idx] / cx[idx]
            assert abs(abs(phase) - 1) < 1e-12
            assert np.allclose(dressed, phase * cx, atol=1e-12)

    def test_x_on_control_propagates(self):
        assert CX_TWIRL_TABLE[("X", "I")] == ("X", "X")

    def test_identity_twirl_possible(self):
        assert CX_TWIRL_TABLE[("I", "I")] == ("I", "I")

    def test_noiseless_expectations_invariant(self):
        circ = random_test_circuit(3, 20, 3)
        base = simulate(circ)
        for seed in range(6):
            twirled = pauli_twirl(circ, seed)
            rho = simulate(twirled)
            for obs in observables(3):
                assert expectation(rho, obs) == pytest.approx(
                    expectation(base, obs), abs=1e-10
                )

    def test_deterministic(self):
        circ = random_test_circuit(4, 25, 4)
        assert pauli_twirl(circ, 9).ops == pauli_twirl(circ, 9).ops
        assert pauli_twirl(circ, 9).ops != pauli_twirl(circ, 10).ops


class TestMeasurementBasis:
    def test_z_basis_is_noop(self):
        circ = random_test_circuit(2, 8, 5)
        assert append_measurement_basis(circ, "Z").ops == circ.ops

    def test_x_basis_on_zero_state(self):
        rho = simulate(append_measurement_basis(Circuit(1), "X"))
        assert expectation(rho, PauliObservable("Z")) == pytest.approx(0.0, abs=1e-12)

    def test_x_basis_on_plus_state(self):
        circ = Circuit(1, h_ops(0))
        rho = simulate(append_measurement_basis(circ, "X"))
        assert expectation(rho, PauliObservable("Z")) == pytest.approx(1.0, abs=1e-10)

    def test_per_qubit_setting(self):
        circ = Circuit(2, h_ops(0))
        measured = append_measurement_basis(circ, "XZ")
        rho = simulate(measured)
        assert expectation(rho, PauliObservable("ZI")) == pytest.approx(1.0, abs=1e-10)
        assert expectation(rho, PauliObservable("IZ")) == pytest.approx(1.0, abs=1e-10)

    def test_measured_value_matches_exact_expectation(self):
        # measuring P via basis change equals Tr(rho P) when noiseless
        circ = random_test_circuit(3, 15, 6)
        rho = simulate(circ)
        for setting in ("XXX", "YYY", "ZZZ", "XYZ"):
            measured = simulate(append_measurement_basis(circ, setting))
            for q in range(3):
                want = expectation(rho, weight_one(3, q, setting[q]))
                got = expectation(measured, weight_one(3, q, "Z"))
                assert got == pytest.approx(want, abs=1e-10)

    def test_bad_basis_rejected(self):
        with pytest.raises(ValueError):
            append_measurement_basis(Circuit(2), "Q")
        with pytest.raises(ValueError):
            append_measurement_basis(Circuit(2), "XYZ")


class TestClifford:
    def test_clifford_tfim_point(self):
        circ = trotter_tfim(TfimParams(4, 3, 0.0, 0.5 * math.pi))
        assert is_clifford(circ)

    def test_t_gate_is_not_clifford(self):
        circ = Circuit(1, [GateOp("rz", (0,), (math.pi / 4,))])
        assert not is_clifford(circ)

    def test_empty_circuit(self):
        assert is_clifford(Circuit(2))

    def test_tolerance(self):
        circ = Circuit(1, [GateOp("rz", (0,), (math.pi / 2 + 5e-10,))])
        assert is_clifford(circ)


class TestJson:
    def test_round_trip_generated_circuits(self):
        circuits = [
            random_test_circuit(3, 20, 7),
            trotter_tfim(TfimParams(4, 2, 0.3, 0.7)),
            random_circuit(4, 4, 11),
        ]
        for circ in circuits:
            back = Circuit.from_json(circ.to_json())
            assert back.num_qubits == circ.num_qubits
            assert back.ops == circ.ops
            assert back.metadata == circ.metadata

    def test_schema_shape(self):
        circ = Circuit(2, [GateOp("cx", (0, 1)), GateOp("rz", (0,), (0.5,))], {"k": "v"})
        d = json.loads(circ.to_json())
        assert set(d) == {"num_qubits", "ops", "metadata"}
        assert d["ops"][0] == {"name": "cx", "qubits": [0, 1], "params": []}
        assert d["ops"][1]["params"] == [0.5]

    def test_observable_round_trip(self):
        obs = PauliObservable("IZXY", -0.25)
        assert PauliObservable.from_dict(obs.to_dict()) == obs


class TestPauliObservable:
    def test_weight(self):
        assert PauliObservable("IZXI").weight == 2
        assert weight_one(4, 2, "Y").weight == 1
        assert weight_one(4, 2, "Y").paulis == "IIYI"

    def test_bad_strings_rejected(self):
        with pytest.raises(ValueError):
            PauliObservable("")
        with pytest.raises(ValueError):
            PauliObservable("AZ")
