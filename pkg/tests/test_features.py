import math

import numpy as np
import pytest

from qemlab.circuits import Circuit, GateOp, PauliObservable, weight_one
from qemlab.features import (
    DatasetRow,
    FeatureLayout,
    FeatureVector,
    csv_to_dataset,
    dataset_to_csv,
    encode,
)
from qemlab.generators import TfimParams, trotter_tfim
from qemlab.sim import ExecutionResult, SimulatorExecutor, lima_like


def fake_result(expectations, setting):
    return ExecutionResult(expectations, None, 10_000, 0, setting)


class TestLayout:
    def test_length_matches_columns(self):
        for n in (2, 4, 6):
            for bins in (4, 8):
                for noise in (False, True):
                    layout = FeatureLayout(n, bins, noise)
                    assert layout.length == len(layout.column_names())

    def test_fingerprint_round_trip(self):
        layout = FeatureLayout(4, 8, True)
        assert FeatureLayout.from_fingerprint(layout.fingerprint) == layout

    def test_from_column_names(self):
        layout = FeatureLayout(3, 8, False)
        assert FeatureLayout.from_column_names(layout.column_names()) == layout
        with pytest.raises(ValueError):
            FeatureLayout.from_column_names(["bogus"])


class TestEncode:
    def test_empty_circuit_z_observable(self):
        layout = FeatureLayout(2)
        res = fake_result({"ZI": 1.0, "IZ": 0.5}, "ZZ")
        fv = encode(Circuit(2), weight_one(2, 0, "Z"), res, layout=layout)
        vals = fv.values
        assert np.all(vals[:11] == 0)  # counts and angle bins
        onehot = vals[11:19]
        # qubit 0 -> Z slot, qubit 1 -> I slot
        assert onehot[3] == 1.0 and onehot[4] == 1.0
        assert onehot.sum() == 2.0
        assert vals[19] == 1.0  # noisy target
        assert vals[20] == 1.0 and vals[21] == 0.5  # weight-one siblings

    def test_gate_counts_from_tfim(self):
        circ = trotter_tfim(TfimParams(4, 1, 0.2, 0.4))
        layout = FeatureLayout(4)
        obs = weight_one(4, 0, "Z")
        res = fake_result({"ZIII": 0.4, "IZII": 0.1, "IIZI": 0.2, "IIIZ": 0.3}, "ZZZZ")
        fv = encode(circ, obs, res, layout=layout)
        assert fv.values[2] == 6  # CX count
        assert fv.values[1] == circ.count("sx")

    def test_angle_binning(self):
        circ = Circuit(1, [GateOp("rz", (0,), (0.1,)), GateOp("rz", (0,), (3.2,))])
        layout = FeatureLayout(1)
        fv = encode(circ, weight_one(1, 0, "Z"), fake_result({"Z": 0.0}, "Z"), layout=layout)
        bins = fv.values[3:11]
        assert bins[0] == 1.0 and bins[4] == 1.0
        assert bins.sum() == circ.count("rz")

    def test_negative_angles_wrap(self):
        circ = Circuit(1, [GateOp("rz", (0,), (-0.1,))])
        fv = encode(circ, weight_one(1, 0, "Z"), fake_result({"Z": 0.0}, "Z"),
                    layout=FeatureLayout(1))
        assert fv.values[3 + 7] == 1.0  # -0.1 mod 2pi lands in the last bin

    def test_same_bin_angles_give_identical_gate_segments(self):
        layout = FeatureLayout(1)
        res = fake_result({"Z": 0.2}, "Z")
        a = encode(Circuit(1, [GateOp("rz", (0,), (0.30,))]), weight_one(1, 0, "Z"), res, layout=layout)
        b = encode(Circuit(1, [GateOp("rz", (0,), (0.45,))]), weight_one(1, 0, "Z"), res, layout=layout)
        assert np.array_equal(a.values[:19], b.values[:19])

    def test_onehot_weight_matches_observable(self):
        layout = FeatureLayout(3)
        res = fake_result({"XYI": 0.1, "XII": 0.2, "IYI": 0.0, "IIZ": 0.3}, "XYZ")
        for pauli in ("XYI", "XII", "IIZ"):
            fv = encode(Circuit(3), PauliObservable(pauli), res, layout=layout)
            onehot = fv.values[11:23].reshape(3, 4)
            non_i = onehot[:, 1:].sum()
            assert non_i == PauliObservable(pauli).weight

    def test_missing_target_rejected(self):
        with pytest.raises(ValueError, match="no noisy value"):
            encode(Circuit(2), weight_one(2, 0, "Z"), fake_result({"IZ": 0.1}, "ZZ"),
                   layout=FeatureLayout(2))

    def test_encoding_deterministic(self):
        circ = trotter_tfim(TfimParams(3, 2, 0.4, 0.6))
        res = fake_result({"ZII": 0.5, "IZI": -0.2, "IIZ": 0.1}, "ZZZ")
        layout = FeatureLayout(3)
        a = encode(circ, weight_one(3, 1, "Z"), res, layout=layout)
        b = encode(circ, weight_one(3, 1, "Z"), res, layout=layout)
        assert np.array_equal(a.values, b.values)

    def test_noise_params_segment(self):
        layout = FeatureLayout(1, include_noise_params=True)
        nm = lima_like()
        fv = encode(Circuit(1), weight_one(1, 0, "Z"), fake_result({"Z": 1.0}, "Z"),
                    noise=nm, layout=layout)
        assert fv.values[-6] == pytest.approx(nm.dep_1q)
        assert fv.values[-4] == pytest.approx(nm.readout_flip)

    def test_end_to_end_with_executor(self):
        circ = trotter_tfim(TfimParams(3, 1, 0.3, 0.5))
        ex = SimulatorExecutor(lima_like(coherent_on=False), shots=4000)
        res = ex.execute(circ, [weight_one(3, q, "Z") for q in range(3)], seed=5)
        fv = encode(circ, weight_one(3, 0, "Z"), res, layout=FeatureLayout(3))
        assert fv.values[23] == res.expectations["ZII"]
        assert fv.values[24:27].tolist() == [
            res.expectations["ZII"], res.expectations["IZI"], res.expectations["IIZ"]
        ]


class TestCsvRoundTrip:
    def rows(self, n_rows, layout, seed=0):
        rng = np.random.default_rng(seed)
        out = []
        for i in range(n_rows):
            vals = rng.normal(size=layout.length)
            out.append(
                DatasetRow(
                    FeatureVector(vals, layout),
                    target=float(rng.uniform(-1, 1)),
                    circuit_id=f"c{i:03d}",
                    observable="ZI",
                    split="train" if i % 2 else "test",
                    noisy=float(rng.uniform(-1, 1)),
                )
            )
        return out

    def test_bitwise_round_trip(self, tmp_path):
        layout = FeatureLayout(2)
        rows = self.rows(100, layout)
        path = tmp_path / "d.csv"
        dataset_to_csv(rows, path)
        back = csv_to_dataset(path)
        assert len(back) == 100
        for a, b in zip(rows, back):
            assert np.array_equal(a.features.values, b.features.values)
            assert a.target == b.target and a.noisy == b.noisy
            assert (a.circuit_id, a.split, a.observable) == (b.circuit_id, b.split, b.observable)

    def test_empty_dataset_header_only(self, tmp_path):
        path = tmp_path / "e.csv"
        dataset_to_csv([], path, layout=FeatureLayout(2))
        text = path.read_text().strip().splitlines()
        assert len(text) == 1
        assert csv_to_dataset(path) == []

    def test_target_preserved(self, tmp_path):
        layout = FeatureLayout(1)
        row = DatasetRow(FeatureVector(np.zeros(layout.length), layout), 0.5, "c", "Z", "train")
        path = tmp_path / "t.csv"
        dataset_to_csv([row], path)
        assert csv_to_dataset(path)[0].target == 0.5

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="header"):
            csv_to_dataset(path)

    def test_row_width_mismatch_reports_line(self, tmp_path):
        layout = FeatureLayout(1)
        rows = self.rows(2, layout)
        path = tmp_path / "w.csv"
        dataset_to_csv(rows, path)
        lines = path.read_text().splitlines()
        lines[2] = lines[2] + ",0.0"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match=":3"):
            csv_to_dataset(path)
