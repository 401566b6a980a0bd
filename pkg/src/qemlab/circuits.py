"""Circuit intermediate representation and the transforms used by mitigation.

The gate set mirrors IBM-style hardware: X, SX, RZ(theta), CX, plus an
optional RY used only for state preparation.  Everything downstream
(simulation, feature extraction, folding, twirling) consumes this IR.

Conventions:
- op lists are in application order (ops[0] acts first),
- qubit 0 is the leftmost / most significant bit in bitstrings and Pauli
  strings,
- circuit equality is defined on expectation values; global phase is
  ignored throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

GATE_ARITY = {"x": 1, "sx": 1, "rz": 1, "ry": 1, "cx": 2}
GATE_NUM_PARAMS = {"x": 0, "sx": 0, "rz": 1, "ry": 1, "cx": 0}

PAULI_LETTERS = "IXYZ"


@dataclass(frozen=True)
class GateOp:
    """One native gate application."""

    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        if self.name not in GATE_ARITY:
            raise ValueError(f"unknown gate '{self.name}'")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(self.qubits) != GATE_ARITY[self.name]:
            raise ValueError(
                f"gate '{self.name}' expects {GATE_ARITY[self.name]} qubit(s), "
                f"got {self.qubits}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"gate '{self.name}' has repeated qubits {self.qubits}")
        if len(self.params) != GATE_NUM_PARAMS[self.name]:
            raise ValueError(
                f"gate '{self.name}' expects {GATE_NUM_PARAMS[self.name]} "
                f"parameter(s), got {self.params}"
            )
        for p in self.params:
            if not math.isfinite(p):
                raise ValueError(f"non-finite gate parameter in {self.name}")


@dataclass
class Circuit:
    """Ordered list of native gates over ``num_qubits`` qubits."""

    num_qubits: int
    ops: tuple[GateOp, ...] = ()
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        self.ops = tuple(self.ops)
        for op in self.ops:
            if max(op.qubits) >= self.num_qubits:
                raise ValueError(
                    f"op {op} addresses qubit outside range 0..{self.num_qubits - 1}"
                )
        self.metadata = {str(k): str(v) for k, v in self.metadata.items()}

    def count(self, name: str) -> int:
        return sum(1 for op in self.ops if op.name == name)

    def extended(self, extra_ops, metadata=None) -> "Circuit":
        md = dict(self.metadata)
        if metadata:
            md.update(metadata)
        return Circuit(self.num_qubits, self.ops + tuple(extra_ops), md)

    # -- JSON schema ---------------------------------------------------------
    # {"num_qubits": int, "ops": [{"name": ..., "qubits": [...], "params": [...]}],
    #  "metadata": {str: str}}

    def to_dict(self) -> dict:
        return {
            "num_qubits": self.num_qubits,
            "ops": [
                {"name": op.name, "qubits": list(op.qubits), "params": list(op.params)}
                for op in self.ops
            ],
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Circuit":
        ops = tuple(
            GateOp(o["name"], tuple(o["qubits"]), tuple(o.get("params", ())))
            for o in d["ops"]
        )
        return cls(int(d["num_qubits"]), ops, dict(d.get("metadata", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "Circuit":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class PauliObservable:
    """n-qubit Pauli string with a real coefficient.

    ``paulis[i]`` acts on qubit ``i``.
    """

    paulis: str
    coefficient: float = 1.0

    def __post_init__(self):
        if not self.paulis or any(c not in PAULI_LETTERS for c in self.paulis):
            raise ValueError(f"bad Pauli string {self.paulis!r}")
        if not math.isfinite(self.coefficient):
            raise ValueError("non-finite coefficient")

    @property
    def num_qubits(self) -> int:
        return len(self.paulis)

    @property
    def weight(self) -> int:
        return sum(1 for c in self.paulis if c != "I")

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.paulis) if c != "I")

    def to_dict(self) -> dict:
        return {"pauli": self.paulis, "coeff": self.coefficient}

    @classmethod
    def from_dict(cls, d: dict) -> "PauliObservable":
        return cls(d["pauli"], float(d["coeff"]))


def weight_one(n: int, qubit: int, letter: str, coefficient: float = 1.0) -> PauliObservable:
    s = "I" * qubit + letter + "I" * (n - qubit - 1)
    return PauliObservable(s, coefficient)


# -- native compilations of common one-qubit rotations ------------------------
# All identities hold up to global phase:
#   H     = RZ(pi/2) . SX . RZ(pi/2)
#   RX(t) = H . RZ(t) . H            -> RZ(pi/2) SX RZ(t+pi) SX RZ(pi/2)
#   RY(t) = RZ(pi/2) . RX(t) . RZ(-pi/2) -> SX RZ(t+pi) SX RZ(pi)

_HALF_PI = math.pi / 2.0


def h_ops(q: int) -> list[GateOp]:
    return [GateOp("rz", (q,), (_HALF_PI,)), GateOp("sx", (q,)), GateOp("rz", (q,), (_HALF_PI,))]


def rx_ops(theta: float, q: int) -> list[GateOp]:
    return [
        GateOp("rz", (q,), (_HALF_PI,)),
        GateOp("sx", (q,)),
        GateOp("rz", (q,), (theta + math.pi,)),
        GateOp("sx", (q,)),
        GateOp("rz", (q,), (_HALF_PI,)),
    ]


def ry_ops(theta: float, q: int) -> list[GateOp]:
    return [
        GateOp("sx", (q,)),
        GateOp("rz", (q,), (theta + math.pi,)),
        GateOp("sx", (q,)),
        GateOp("rz", (q,), (math.pi,)),
    ]


def pauli_ops(letter: str, q: int) -> list[GateOp]:
    """A Pauli gate compiled to the native set (up to global phase)."""
    if letter == "I":
        return []
    if letter == "X":
        return [GateOp("x", (q,))]
    if letter == "Z":
        return [GateOp("rz", (q,), (math.pi,))]
    if letter == "Y":
        # Y = i X.Z -> apply Z first, then X
        return [GateOp("rz", (q,), (math.pi,)), GateOp("x", (q,))]
    raise ValueError(f"bad Pauli letter {letter!r}")


# -- circuit transforms --------------------------------------------------------


def two_qubit_depth(circuit: Circuit) -> int:
    """Greedy left-to-right layering of CX gates; single-qubit gates ignored."""
    level = [0] * circuit.num_qubits
    depth = 0
    for op in circuit.ops:
        if op.name != "cx":
            continue
        a, b = op.qubits
        lvl = max(level[a], level[b]) + 1
        level[a] = level[b] = lvl
        depth = max(depth, lvl)
    return depth


def fold_two_qubit_gates(circuit: Circuit, factor: int) -> Circuit:
    """Replace every CX by ``factor`` consecutive CX on the same pair.

    Odd factors leave the logical circuit unchanged (CX is self-inverse).
    """
    if factor < 1 or factor % 2 == 0:
        raise ValueError(f"fold factor must be odd and positive, got {factor}")
    ops: list[GateOp] = []
    for op in circuit.ops:
        if op.name == "cx":
            ops.extend([op] * factor)
        else:
            ops.append(op)
    return Circuit(circuit.num_qubits, ops, dict(circuit.metadata))


# (pre_control, pre_target) -> (post_control, post_target) such that
# post . CX . pre == CX up to global phase.  Obtained by conjugating the
# pre-Pauli through CX; verified against 4x4 matrix products in the tests.
CX_TWIRL_TABLE: dict[tuple[str, str], tuple[str, str]] = {
    ("I", "I"): ("I", "I"),
    ("I", "X"): ("I", "X"),
    ("I", "Y"): ("Z", "Y"),
    ("I", "Z"): ("Z", "Z"),
    ("X", "I"): ("X", "X"),
    ("X", "X"): ("X", "I"),
    ("X", "Y"): ("Y", "Z"),
    ("X", "Z"): ("Y", "Y"),
    ("Y", "I"): ("Y", "X"),
    ("Y", "X"): ("Y", "I"),
    ("Y", "Y"): ("X", "Z"),
    ("Y", "Z"): ("X", "Y"),
    ("Z", "I"): ("Z", "I"),
    ("Z", "X"): ("Z", "X"),
    ("Z", "Y"): ("I", "Y"),
    ("Z", "Z"): ("I", "Z"),
}

_TWIRL_PAIRS = sorted(CX_TWIRL_TABLE)


def pauli_twirl(circuit: Circuit, seed: int) -> Circuit:
    """Wrap every CX in uniformly random Paulis that leave it logically equal.

    Deterministic given ``seed``.
    """
    rng = np.random.default_rng(seed)
    ops: list[GateOp] = []
    for op in circuit.ops:
        if op.name != "cx":
            ops.append(op)
            continue
        pre = _TWIRL_PAIRS[int(rng.integers(0, 16))]
        post = CX_TWIRL_TABLE[pre]
        c, t = op.qubits
        ops.extend(pauli_ops(pre[0], c))
        ops.extend(pauli_ops(pre[1], t))
        ops.append(op)
        ops.extend(pauli_ops(post[0], c))
        ops.extend(pauli_ops(post[1], t))
    return Circuit(circuit.num_qubits, ops, dict(circuit.metadata))


def append_measurement_basis(circuit: Circuit, basis: str) -> Circuit:
    """Append basis-change gates so Z-basis measurement realizes ``basis``.

    ``basis`` is a single letter applied to every qubit, or a length-n string
    over {X, Y, Z} giving a per-qubit setting.
    """
    if len(basis) == 1:
        basis = basis * circuit.num_qubits
    if len(basis) != circuit.num_qubits or any(c not in "XYZ" for c in basis):
        raise ValueError(f"bad measurement basis {basis!r}")
    extra: list[GateOp] = []
    for q, letter in enumerate(basis):
        if letter == "Z":
            continue
        if letter == "Y":
            extra.append(GateOp("rz", (q,), (-_HALF_PI,)))  # S-dagger
        extra.extend(h_ops(q))
    return circuit.extended(extra)


def is_clifford(circuit: Circuit, tol: float = 1e-9) -> bool:
    """True iff every rotation angle is an integer multiple of pi/2."""
    for op in circuit.ops:
        for theta in op.params:
            r = math.remainder(theta, _HALF_PI)
            if abs(r) > tol:
                return False
    return True
