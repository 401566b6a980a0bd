"""Fixed-layout numeric encoding of (circuit, observable, noisy values).

Every model consumes the same vector: native-gate counts, an RZ-angle
histogram, a per-qubit one-hot of the target observable, the target's noisy
expectation value, the noisy values of the measured weight-one observables,
and optionally the scalar noise parameters of the backend.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, PauliObservable
from .sim import ExecutionResult, NoiseModel

_TWO_PI = 2.0 * math.pi
NOISE_PARAM_NAMES = ["dep_1q", "dep_2q", "readout_flip", "coherent_cx_angle", "t1", "t2"]


@dataclass(frozen=True)
class FeatureLayout:
    """Column layout shared by a whole dataset."""

    n_qubits: int
    n_angle_bins: int = 8
    include_noise_params: bool = False

    def column_names(self) -> list[str]:
        cols = ["count_x", "count_sx", "count_cx"]
        cols += [f"rz_bin_{b}" for b in range(self.n_angle_bins)]
        for q in range(self.n_qubits):
            cols += [f"obs_q{q}_{letter.lower()}" for letter in "IXYZ"]
        cols.append("noisy_target")
        cols += [f"noisy_w1_q{q}" for q in range(self.n_qubits)]
        if self.include_noise_params:
            cols += [f"noise_{name}" for name in NOISE_PARAM_NAMES]
        return cols

    @property
    def length(self) -> int:
        return (
            3
            + self.n_angle_bins
            + 4 * self.n_qubits
            + 1
            + self.n_qubits
            + (len(NOISE_PARAM_NAMES) if self.include_noise_params else 0)
        )

    @property
    def fingerprint(self) -> str:
        return (
            f"v1:n={self.n_qubits}:bins={self.n_angle_bins}"
            f":noise={int(self.include_noise_params)}"
        )

    @classmethod
    def from_fingerprint(cls, fp: str) -> "FeatureLayout":
        parts = dict(p.split("=") for p in fp.split(":")[1:])
        return cls(int(parts["n"]), int(parts["bins"]), bool(int(parts["noise"])))

    @classmethod
    def from_column_names(cls, cols: list[str]) -> "FeatureLayout":
        n = sum(1 for c in cols if c.startswith("noisy_w1_q"))
        bins = sum(1 for c in cols if c.startswith("rz_bin_"))
        with_noise = any(c.startswith("noise_") for c in cols)
        layout = cls(n, bins, with_noise)
        if layout.column_names() != list(cols):
            raise ValueError("unrecognized feature column layout")
        return layout


@dataclass
class FeatureVector:
    values: np.ndarray
    layout: FeatureLayout


@dataclass
class DatasetRow:
    features: FeatureVector
    target: float
    circuit_id: str
    observable: str
    split: str
    noisy: float = 0.0


def encode(
    circuit: Circuit,
    obs: PauliObservable,
    noisy: ExecutionResult,
    noise: NoiseModel | None = None,
    layout: FeatureLayout | None = None,
) -> FeatureVector:
    """Deterministic feature vector for one (circuit, observable) pair.

    ``noisy`` must contain the target observable's measured value; the
    weight-one slots are filled from the measurement setting's single-qubit
    observables (zero where absent).
    """
    n = circuit.num_qubits
    if layout is None:
        layout = FeatureLayout(n, include_noise_params=noise is not None)
    if layout.n_qubits != n:
        raise ValueError(f"layout is for {layout.n_qubits} qubits, circuit has {n}")
    if obs.num_qubits != n:
        raise ValueError("observable size does not match circuit")
    if obs.paulis not in noisy.expectations:
        raise ValueError(f"no noisy value for target observable {obs.paulis}")

    vals = np.zeros(layout.length)
    vals[0] = circuit.count("x")
    vals[1] = circuit.count("sx")
    vals[2] = circuit.count("cx")
    bin_width = _TWO_PI / layout.n_angle_bins
    for op in circuit.ops:
        if op.name == "rz":
            b = int((op.params[0] % _TWO_PI) / bin_width) % layout.n_angle_bins
            vals[3 + b] += 1
    off = 3 + layout.n_angle_bins
    for q, letter in enumerate(obs.paulis):
        vals[off + 4 * q + "IXYZ".index(letter)] = 1.0
    off += 4 * n
    vals[off] = noisy.expectations[obs.paulis]
    off += 1
    setting = noisy.setting or "Z" * n
    for q in range(n):
        key = "I" * q + setting[q] + "I" * (n - q - 1)
        vals[off + q] = noisy.expectations.get(key, 0.0)
    if layout.include_noise_params:
        off += n
        nm = noise or NoiseModel()
        for i, name in enumerate(NOISE_PARAM_NAMES):
            v = getattr(nm, name)
            vals[off + i] = 0.0 if not math.isfinite(v) else v
    return FeatureVector(vals, layout)


# -- dataset CSV -----------------------------------------------------------------

_META_COLS = ["circuit_id", "split", "observable"]


def dataset_to_csv(rows: list[DatasetRow], path, layout: FeatureLayout | None = None) -> None:
    if rows:
        layout = rows[0].features.layout
    elif layout is None:
        layout = FeatureLayout(1)
    header = _META_COLS + layout.column_names() + ["noisy", "target"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            if row.features.layout != layout:
                raise ValueError("mixed feature layouts in one dataset")
            w.writerow(
                [row.circuit_id, row.split, row.observable]
                + [repr(float(v)) for v in row.features.values]
                + [repr(float(row.noisy)), repr(float(row.target))]
            )


def csv_to_dataset(path) -> list[DatasetRow]:
    rows: list[DatasetRow] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty dataset file")
        if header[:3] != _META_COLS or header[-2:] != ["noisy", "target"]:
            raise ValueError(f"{path}: unrecognized dataset header")
        try:
            layout = FeatureLayout.from_column_names(header[3:-2])
        except ValueError as exc:
            raise ValueError(f"{path}: {exc}") from None
        n_feat = layout.length
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}"
                )
            vals = np.array([float(v) for v in rec[3 : 3 + n_feat]])
            rows.append(
                DatasetRow(
                    features=FeatureVector(vals, layout),
                    target=float(rec[-1]),
                    circuit_id=rec[0],
                    observable=rec[2],
                    split=rec[1],
                    noisy=float(rec[-2]),
                )
            )
    return rows


def design_matrix(rows: list[DatasetRow]) -> tuple[np.ndarray, np.ndarray]:
    """Stack rows into (X, y) arrays for model fitting."""
    if not rows:
        raise ValueError("empty dataset")
    x = np.stack([r.features.values for r in rows])
    y = np.array([r.target for r in rows])
    return x, y
