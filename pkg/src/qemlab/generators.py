"""Builders for the benchmark circuit families and the H2 Hamiltonian input."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .circuits import Circuit, GateOp, PauliObservable, rx_ops, ry_ops, two_qubit_depth


@dataclass(frozen=True)
class TfimParams:
    """Trotterized transverse-field Ising chain.

    Angle convention: one step applies RZZ(2 * j) on every bond and
    RX(2 * h) on every site (dt absorbed into j and h), so h = 0.5 * pi
    turns the field layer into Pauli X and the circuit Clifford when j = 0.
    """

    n_sites: int
    steps: int
    j: float
    h: float
    initial_excitations: tuple[int, ...] = (0,)

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("need at least 2 sites")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")


@dataclass(frozen=True)
class AnsatzParams:
    thetas: tuple[float, ...]

    def __post_init__(self):
        if len(self.thetas) != 8:
            raise ValueError(f"ansatz takes exactly 8 angles, got {len(self.thetas)}")


def trotter_tfim(params: TfimParams) -> Circuit:
    """First-order Trotter circuit: per step, even-bond RZZ blocks, odd-bond
    RZZ blocks, then the RX field layer.  2(n-1) CX per step."""
    n = params.n_sites
    theta_j = 2.0 * params.j
    theta_h = 2.0 * params.h
    ops: list[GateOp] = [GateOp("x", (q,)) for q in params.initial_excitations]
    even = [(q, q + 1) for q in range(0, n - 1, 2)]
    odd = [(q, q + 1) for q in range(1, n - 1, 2)]
    for _ in range(params.steps):
        for bonds in (even, odd):
            for a, b in bonds:
                ops.append(GateOp("cx", (a, b)))
            for a, b in bonds:
                ops.append(GateOp("rz", (b,), (theta_j,)))
            for a, b in bonds:
                ops.append(GateOp("cx", (a, b)))
        for q in range(n):
            ops.extend(rx_ops(theta_h, q))
    meta = {
        "family": "tfim",
        "n_sites": str(n),
        "steps": str(params.steps),
        "j": repr(params.j),
        "h": repr(params.h),
        "excitations": ",".join(map(str, params.initial_excitations)),
    }
    return Circuit(n, ops, meta)


def tfim_free_field_expectations(params: TfimParams) -> list[float]:
    """Closed-form noiseless <Z_i> for j = 0: each site rotates independently,
    so <Z_i> = +/- cos(steps * 2h) by initial excitation."""
    if params.j != 0.0:
        raise ValueError("closed form only valid for j = 0")
    c = math.cos(params.steps * 2.0 * params.h)
    return [-c if q in params.initial_excitations else c for q in range(params.n_sites)]


def random_circuit(n_qubits: int, depth_2q: int, seed: int) -> Circuit:
    """Layered random circuit with exactly ``depth_2q`` CX layers.

    Each layer holds non-overlapping CX pairs (one forced to overlap the
    previous layer so greedy layering cannot merge layers) interleaved with
    random 1-qubit gates; RZ angles uniform in [0, 2pi).
    """
    if n_qubits < 2:
        raise ValueError("need at least 2 qubits")
    if depth_2q < 2:
        raise ValueError("depth_2q must be >= 2")
    rng = np.random.default_rng(seed)
    ops: list[GateOp] = []

    def sprinkle_1q():
        for q in range(n_qubits):
            r = rng.random()
            if r < 0.2:
                ops.append(GateOp("x", (q,)))
            elif r < 0.4:
                ops.append(GateOp("sx", (q,)))
            elif r < 0.6:
                ops.append(GateOp("rz", (q,), (float(rng.uniform(0.0, 2 * math.pi)),)))

    chain: tuple[int, int] | None = None
    for _ in range(depth_2q):
        sprinkle_1q()
        order = [int(q) for q in rng.permutation(n_qubits)]
        if chain is not None:
            anchor = chain[int(rng.integers(0, 2))]
            order.remove(anchor)
            order.insert(0, anchor)
        n_pairs = int(rng.integers(1, n_qubits // 2 + 1))
        layer_pairs = [
            (order[2 * i], order[2 * i + 1]) for i in range(min(n_pairs, n_qubits // 2))
        ]
        for a, b in layer_pairs:
            ops.append(GateOp("cx", (a, b)))
        chain = layer_pairs[0]
    sprinkle_1q()
    circ = Circuit(
        n_qubits,
        ops,
        {"family": "random", "depth_2q": str(depth_2q), "seed": str(seed)},
    )
    assert two_qubit_depth(circ) == depth_2q
    return circ


def two_local_ansatz(params: AnsatzParams) -> Circuit:
    """Two-qubit variational ansatz: RY+RZ on each qubit, CX, RY+RZ again."""
    t = params.thetas
    ops: list[GateOp] = []
    ops.extend(ry_ops(t[0], 0))
    ops.append(GateOp("rz", (0,), (t[1],)))
    ops.extend(ry_ops(t[2], 1))
    ops.append(GateOp("rz", (1,), (t[3],)))
    ops.append(GateOp("cx", (0, 1)))
    ops.extend(ry_ops(t[4], 0))
    ops.append(GateOp("rz", (0,), (t[5],)))
    ops.extend(ry_ops(t[6], 1))
    ops.append(GateOp("rz", (1,), (t[7],)))
    return Circuit(2, ops, {"family": "two_local"})


# -- H2 Hamiltonian --------------------------------------------------------------

H2_TABLE_COLUMNS = ["bond_length", "c_xx", "c_zz", "c_iz", "c_zi", "offset"]


@dataclass
class H2Table:
    rows: dict[float, dict[str, float]] = field(default_factory=dict)

    @property
    def bond_lengths(self) -> list[float]:
        return sorted(self.rows)


def load_h2_table(path=None) -> H2Table:
    """Read the bond-length coefficient table (CSV, header fixed).

    The packaged default is substitute data computed from a minimal-basis
    H2 model, standing in for the privately communicated coefficients.
    """
    if path is None:
        path = resources.files("qemlab").joinpath("data/h2_sto3g.csv")
    table = H2Table()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != H2_TABLE_COLUMNS:
            raise ValueError(
                f"bad H2 table header {reader.fieldnames}, expected {H2_TABLE_COLUMNS}"
            )
        for row in reader:
            vals = {k: float(row[k]) for k in H2_TABLE_COLUMNS}
            table.rows[vals["bond_length"]] = vals
    return table


def h2_hamiltonian(
    bond_length: float, table: H2Table | None = None
) -> list[PauliObservable]:
    """Four-term 2-qubit H2 Hamiltonian (XX, ZZ, IZ, ZI) plus identity offset."""
    if table is None:
        table = load_h2_table()
    key = None
    for b in table.rows:
        if abs(b - bond_length) < 1e-9:
            key = b
            break
    if key is None:
        avail = ", ".join(f"{b:g}" for b in table.bond_lengths)
        raise ValueError(f"bond length {bond_length} not tabulated; available: {avail}")
    row = table.rows[key]
    return [
        PauliObservable("XX", row["c_xx"]),
        PauliObservable("ZZ", row["c_zz"]),
        PauliObservable("IZ", row["c_iz"]),
        PauliObservable("ZI", row["c_zi"]),
        PauliObservable("II", row["offset"]),
    ]


def hamiltonian_matrix(terms: list[PauliObservable]) -> np.ndarray:
    """Dense matrix of a Pauli-string Hamiltonian (for exact diagonalization)."""
    from .sim import PAULI_MATS

    n = terms[0].num_qubits
    h = np.zeros((2**n, 2**n), dtype=complex)
    for t in terms:
        m = np.array([[1.0]], dtype=complex)
        for letter in t.paulis:
            m = np.kron(m, PAULI_MATS[letter])
        h += t.coefficient * m
    return h
