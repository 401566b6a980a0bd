"""Density-matrix simulator with configurable noise channels.

Noise is attached per gate: a depolarizing channel on the acted qubits,
thermal relaxation (amplitude damping from T1, extra dephasing from T2),
and for CX an optional coherent over-rotation.  Readout error is a
symmetric per-qubit bit-flip confusion applied at measurement.

Implementation notes:
- the state is a dense 2^n x 2^n matrix, manipulated as a rank-2n tensor
  (row axes 0..n-1, column axes n..2n-1, qubit 0 = most significant bit),
- every noisy gate is applied as a single precomposed superoperator
  (4x4 for one-qubit gates, 16x16 for CX), which keeps the per-gate cost
  to a couple of BLAS calls,
- dimensions are hard-capped (default 10 qubits, ~16 MiB per matrix).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuits import Circuit, PauliObservable, append_measurement_basis, weight_one

MAX_QUBITS = 10

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)
PAULI_MATS = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


class ResourceLimitError(RuntimeError):
    """Circuit too large for the dense simulator."""


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


_CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _crx(theta: float) -> np.ndarray:
    """Controlled-RX on (control, target), control = major bit."""
    u = np.eye(4, dtype=complex)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    u[2:, 2:] = np.array([[c, -1j * s], [-1j * s, c]])
    return u


def gate_unitary(name: str, params: tuple[float, ...]) -> np.ndarray:
    if name == "x":
        return _X
    if name == "sx":
        return _SX
    if name == "rz":
        return _rz(params[0])
    if name == "ry":
        return _ry(params[0])
    if name == "cx":
        return _CX
    raise ValueError(f"unknown gate '{name}'")


# -- noise model ---------------------------------------------------------------


@dataclass(frozen=True)
class NoiseModel:
    """Per-gate error channels plus readout confusion.

    Rates are depolarizing probabilities (see ``infidelity_to_depolarizing``
    for conversion from average gate infidelity).  Times/durations in
    microseconds.  The ``*_on`` flags switch whole channels off without
    touching the calibrated values.
    """

    dep_1q: float = 0.0
    dep_2q: float = 0.0
    t1: float = math.inf
    t2: float = math.inf
    dur_1q: float = 0.035
    dur_2q: float = 0.30
    readout_flip: float = 0.0
    coherent_cx_angle: float = 0.0
    depolarizing_on: bool = True
    thermal_on: bool = True
    readout_on: bool = True
    coherent_on: bool = True
    # reference devices implement RZ as a virtual frame change: no pulse,
    # no duration, no error (the calibration tables list no RZ error)
    rz_virtual: bool = True

    def __post_init__(self):
        for name in ("dep_1q", "dep_2q", "readout_flip"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.t2 > 2 * self.t1:
            raise ValueError(f"t2={self.t2} exceeds 2*t1={2 * self.t1}")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ValueError("t1 and t2 must be positive")
        if self.dur_1q < 0 or self.dur_2q < 0:
            raise ValueError("gate durations must be non-negative")
        if not math.isfinite(self.coherent_cx_angle):
            raise ValueError("coherent_cx_angle must be finite")

    @property
    def effective_readout_flip(self) -> float:
        return self.readout_flip if self.readout_on else 0.0


def infidelity_to_depolarizing(r: float, d: int) -> float:
    """Depolarizing probability whose average gate infidelity equals ``r``.

    For a d-dimensional depolarizing channel, r = p (d - 1) / d.
    """
    if not 0.0 <= r <= (d - 1) / d:
        raise ValueError(f"infidelity r={r} outside [0, {(d - 1) / d}]")
    return r * d / (d - 1)


# Appendix-style average error parameters for the two reference devices.
_LIMA = dict(sx_x=4.4e-4, cx=1.2e-2, t1=61.0, t2=73.0, readout=3.4e-2)
_BELEM = dict(sx_x=4.1e-4, cx=1.4e-2, t1=80.0, t2=79.0, readout=3.0e-2)
DEFAULT_COHERENT_CX_ANGLE = 0.04 * math.pi


def _preset(vals: dict, **flags) -> NoiseModel:
    return NoiseModel(
        dep_1q=infidelity_to_depolarizing(vals["sx_x"], 2),
        dep_2q=infidelity_to_depolarizing(vals["cx"], 4),
        t1=vals["t1"],
        t2=vals["t2"],
        readout_flip=vals["readout"],
        coherent_cx_angle=DEFAULT_COHERENT_CX_ANGLE,
        **flags,
    )


def lima_like(**flags) -> NoiseModel:
    return _preset(_LIMA, **flags)


def belem_like(**flags) -> NoiseModel:
    return _preset(_BELEM, **flags)


NOISE_PRESETS = {"lima-like": lima_like, "belem-like": belem_like}


# -- density matrix ------------------------------------------------------------


@dataclass
class DensityMatrix:
    n: int
    data: np.ndarray

    @classmethod
    def zero_state(cls, n: int) -> "DensityMatrix":
        if n > MAX_QUBITS:
            raise ResourceLimitError(
                f"{n} qubits exceeds the dense-simulation cap of {MAX_QUBITS}"
            )
        d = 2**n
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
        return cls(n, rho)

    @property
    def dim(self) -> int:
        return 2**self.n

    def tensor(self) -> np.ndarray:
        return self.data.reshape((2,) * (2 * self.n))

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.n, self.data.copy())

    def check_valid(self, tol: float = 1e-10, psd_tol: float = 1e-8) -> None:
        """Assert Hermiticity, unit trace, and positive semidefiniteness."""
        if not np.allclose(self.data, self.data.conj().T, atol=tol):
            raise AssertionError("density matrix not Hermitian")
        tr = np.trace(self.data).real
        if abs(tr - 1.0) > tol:
            raise AssertionError(f"trace {tr} != 1")
        evals = np.linalg.eigvalsh(self.data)
        if evals.min() < -psd_tol:
            raise AssertionError(f"negative eigenvalue {evals.min()}")


def _moved_flat(rho_t: np.ndarray, qubits: tuple[int, ...], n: int):
    """Bring the row+col axes of ``qubits`` to the front and flatten them."""
    k = len(qubits)
    axes = list(qubits) + [n + q for q in qubits]
    moved = np.moveaxis(rho_t, axes, range(2 * k))
    return moved.reshape(4**k, -1), moved.shape, axes


def apply_superop(dm: DensityMatrix, s: np.ndarray, qubits: tuple[int, ...]) -> None:
    """In-place application of a channel superoperator on ``qubits``.

    ``s`` maps the flattened (row-bits, col-bits) index of the acted
    subsystem, i.e. s = sum_k kron(K_k, conj(K_k)).
    """
    rho_t = dm.tensor()
    flat, shape, axes = _moved_flat(rho_t, qubits, dm.n)
    out = (s @ flat).reshape(shape)
    dm.data = np.moveaxis(out, range(2 * len(qubits)), axes).reshape(dm.dim, dm.dim)


def apply_unitary(dm: DensityMatrix, u: np.ndarray, qubits: tuple[int, ...]) -> None:
    apply_superop(dm, np.kron(u, u.conj()), qubits)


def superop_from_kraus(kraus: list[np.ndarray]) -> np.ndarray:
    s = np.zeros((kraus[0].size,) * 2, dtype=complex)
    for k in kraus:
        s += np.kron(k, k.conj())
    return s


def depolarize(dm: DensityMatrix, p: float, qubits: tuple[int, ...] | None = None) -> None:
    """In-place depolarizing channel; ``qubits=None`` acts on every qubit.

    E(rho) = (1 - p) rho + p * I/2^k (x) tr_qubits(rho).
    """
    if qubits is None:
        qubits = tuple(range(dm.n))
    k = len(qubits)
    rho_t = dm.tensor()
    flat, shape, axes = _moved_flat(rho_t, qubits, dm.n)
    d = 2**k
    sub_trace = flat.reshape(d, d, -1)
    reduced = np.einsum("aab->b", sub_trace)
    mixed = np.zeros_like(flat)
    eye_idx = np.arange(d) * d + np.arange(d)
    mixed[eye_idx, :] = reduced[None, :] / d
    out = ((1.0 - p) * flat + p * mixed).reshape(shape)
    dm.data = np.moveaxis(out, range(2 * k), axes).reshape(dm.dim, dm.dim)


def _depolarizing_superop(p: float, k: int) -> np.ndarray:
    """Superoperator of the joint depolarizing channel on k qubits."""
    d = 2**k
    s = (1.0 - p) * np.eye(d * d, dtype=complex)
    eye_idx = np.arange(d) * d + np.arange(d)
    s[np.ix_(eye_idx, eye_idx)] += p / d
    return s


def _thermal_kraus(noise: NoiseModel, duration: float) -> list[np.ndarray]:
    """Amplitude damping from T1 plus extra dephasing so coherence decays
    as exp(-duration / T2)."""
    gamma = 1.0 - math.exp(-duration / noise.t1) if math.isfinite(noise.t1) else 0.0
    k0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)
    kraus = [k0, k1]
    if math.isfinite(noise.t2):
        target = math.exp(-duration / noise.t2)
        residual = target / math.sqrt(1 - gamma) if gamma < 1 else 0.0
        residual = min(1.0, residual)
        q = (1.0 - residual) / 2.0
        if q > 0:
            kz = [math.sqrt(1 - q) * _I2, math.sqrt(q) * _Z]
            kraus = [z @ k for z in kz for k in kraus]
    return kraus


@lru_cache(maxsize=32)
def _channel_superops(noise: NoiseModel) -> dict:
    """Precomposed per-gate-class channel superoperators for a noise model."""
    s1 = np.eye(4, dtype=complex)
    s2 = np.eye(16, dtype=complex)
    if noise.depolarizing_on:
        s1 = _depolarizing_superop(noise.dep_1q, 1) @ s1
        s2 = _depolarizing_superop(noise.dep_2q, 2) @ s2
    if noise.thermal_on and (math.isfinite(noise.t1) or math.isfinite(noise.t2)):
        th1 = superop_from_kraus(_thermal_kraus(noise, noise.dur_1q))
        th2q = _thermal_kraus(noise, noise.dur_2q)
        th2 = superop_from_kraus([np.kron(a, b) for a in th2q for b in th2q])
        s1 = th1 @ s1
        s2 = th2 @ s2
    if noise.coherent_on and noise.coherent_cx_angle != 0.0:
        u = _crx(noise.coherent_cx_angle)
        s2 = np.kron(u, u.conj()) @ s2
    s_cx = s2 @ np.kron(_CX, _CX.conj())
    return {"1q": s1, "2q": s2, "cx": s_cx}


def simulate(
    circuit: Circuit,
    noise: NoiseModel | None = None,
    initial: DensityMatrix | None = None,
    max_qubits: int = MAX_QUBITS,
) -> DensityMatrix:
    """Run a circuit from |0...0> (or ``initial``) and return the final state.

    Runs of single-qubit gates on one qubit are fused into a single
    superoperator application (their per-gate channels compose by matrix
    product, so this changes nothing but speed).
    """
    if circuit.num_qubits > max_qubits:
        raise ResourceLimitError(
            f"{circuit.num_qubits} qubits exceeds the configured cap {max_qubits}"
        )
    if initial is not None and initial.n != circuit.num_qubits:
        raise ValueError("initial state size does not match circuit")
    dm = initial.copy() if initial is not None else DensityMatrix.zero_state(circuit.num_qubits)
    chans = _channel_superops(noise) if noise is not None else None
    pending: dict[int, np.ndarray] = {}

    def op_superop(op) -> np.ndarray:
        u = gate_unitary(op.name, op.params)
        s = np.kron(u, u.conj())
        if chans is not None and not (op.name == "rz" and noise.rz_virtual):
            s = chans["1q"] @ s
        return s

    def flush(q: int) -> None:
        s = pending.pop(q, None)
        if s is not None:
            apply_superop(dm, s, (q,))

    for op in circuit.ops:
        if op.name == "cx":
            flush(op.qubits[0])
            flush(op.qubits[1])
            if chans is not None:
                apply_superop(dm, chans["cx"], op.qubits)
            else:
                apply_unitary(dm, _CX, op.qubits)
        else:
            q = op.qubits[0]
            s = op_superop(op)
            pending[q] = s @ pending[q] if q in pending else s
    for q in sorted(pending):
        apply_superop(dm, pending[q], (q,))
    return dm


def simulate_layers(
    layers: list[Circuit], dep_rates: list[float], initial: DensityMatrix | None = None
) -> DensityMatrix:
    """Alternate noiseless unitary layers with global depolarizing channels.

    This is the regime in which noisy expectations are exactly
    (1 - p(l)) * ideal with p(l) = 1 - prod(1 - p_i) for traceless
    observables.
    """
    if not layers or len(layers) != len(dep_rates):
        raise ValueError("need one depolarizing rate per layer")
    dm = initial.copy() if initial is not None else DensityMatrix.zero_state(layers[0].num_qubits)
    for layer, p in zip(layers, dep_rates):
        dm = simulate(layer, noise=None, initial=dm)
        depolarize(dm, p)
    return dm


# -- observables ---------------------------------------------------------------


def _pauli_action(paulis: str) -> tuple[np.ndarray, np.ndarray]:
    """P |c> = phase(c) |perm(c)> for a Pauli string (signed permutation)."""
    n = len(paulis)
    idx = np.arange(2**n)
    perm = idx.copy()
    phase = np.ones(2**n, dtype=complex)
    for i, letter in enumerate(paulis):
        bit = (idx >> (n - 1 - i)) & 1
        if letter == "I":
            continue
        if letter in ("X", "Y"):
            perm ^= 1 << (n - 1 - i)
        if letter == "Y":
            phase *= np.where(bit == 0, 1j, -1j)
        elif letter == "Z":
            phase *= np.where(bit == 0, 1.0, -1.0)
    return perm, phase


def expectation(rho: DensityMatrix, obs: PauliObservable) -> float:
    """Exact coefficient * Tr(rho P)."""
    if obs.num_qubits != rho.n:
        raise ValueError(
            f"observable on {obs.num_qubits} qubits does not match {rho.n}-qubit state"
        )
    perm, phase = _pauli_action(obs.paulis)
    idx = np.arange(rho.dim)
    # Tr(rho P) = sum_c rho[c, perm(c)] * phase(c)  since P|c> = phase(c)|perm(c)>
    val = np.sum(phase * rho.data[idx, perm])
    if abs(val.imag) > 1e-8:
        raise AssertionError(f"non-real Pauli expectation {val}")
    return obs.coefficient * float(val.real)


# -- sampling ------------------------------------------------------------------


@dataclass
class ExecutionResult:
    """Measured (or exactly evaluated) expectation values for one circuit."""

    expectations: dict[str, float]
    counts: dict[str, int] | None
    shots: int
    seed: int
    setting: str | None = None


def _readout_distribution(probs: np.ndarray, n: int, flip: float) -> np.ndarray:
    """Push the outcome distribution through per-qubit symmetric confusion."""
    if flip == 0.0:
        return probs
    conf = np.array([[1 - flip, flip], [flip, 1 - flip]])
    t = probs.reshape((2,) * n)
    for q in range(n):
        t = np.tensordot(conf, t, axes=([1], [q]))
        t = np.moveaxis(t, 0, q)
    return t.reshape(-1)


def _diag_distribution(rho: DensityMatrix, noise: NoiseModel | None) -> np.ndarray:
    probs = np.clip(np.diag(rho.data).real, 0.0, None)
    probs = probs / probs.sum()
    if noise is not None and noise.effective_readout_flip > 0.0:
        probs = _readout_distribution(probs, rho.n, noise.effective_readout_flip)
    return probs


def _z_mask_expectation(weights: np.ndarray, n: int, support: tuple[int, ...]) -> float:
    idx = np.arange(2**n)
    parity = np.zeros(2**n, dtype=np.int64)
    for q in support:
        parity ^= (idx >> (n - 1 - q)) & 1
    signs = 1.0 - 2.0 * parity
    return float(np.dot(weights, signs))


def sample_counts(
    rho: DensityMatrix,
    shots: int,
    noise: NoiseModel | None = None,
    seed: int = 0,
    observables: list[PauliObservable] | None = None,
) -> ExecutionResult:
    """Sample computational-basis outcomes (with readout flips) from diag(rho).

    ``observables`` must be Z/I strings; their expectations are estimated
    from the sampled counts.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = _diag_distribution(rho, noise)
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, probs)
    n = rho.n
    counts = {format(i, f"0{n}b"): int(c) for i, c in enumerate(draws) if c > 0}
    expectations: dict[str, float] = {}
    if observables:
        freq = draws / shots
        for obs in observables:
            if any(c not in "IZ" for c in obs.paulis):
                raise ValueError(
                    f"sample_counts estimates diagonal observables only, got {obs.paulis}"
                )
            expectations[obs.paulis] = obs.coefficient * _z_mask_expectation(
                freq, n, obs.support()
            )
    return ExecutionResult(expectations, counts, shots, seed)


# -- measurement protocol -------------------------------------------------------


def _diagonalized(paulis: str, setting: str) -> str:
    """Rewrite a setting-compatible Pauli as the Z/I string measured after
    the basis change."""
    out = []
    for p, s in zip(paulis, setting):
        if p == "I":
            out.append("I")
        elif p == s:
            out.append("Z")
        else:
            raise ValueError(f"observable {paulis} not measurable in setting {setting}")
    return "".join(out)


def derive_setting(observables: list[PauliObservable], n: int) -> str:
    """Single measurement setting covering all the given observables."""
    letters = ["Z"] * n
    fixed = [False] * n
    for obs in observables:
        for q, p in zip(range(n), obs.paulis):
            if p == "I":
                continue
            if fixed[q] and letters[q] != p:
                raise ValueError(
                    f"observables mix bases on qubit {q}: {letters[q]} vs {p}"
                )
            letters[q] = p
            fixed[q] = True
    return "".join(letters)


def run_measurement(
    circuit: Circuit,
    setting: str,
    observables: list[PauliObservable],
    noise: NoiseModel | None,
    shots: int | None,
    seed: int,
    include_weight_one: bool = True,
) -> ExecutionResult:
    """Execute a circuit in one Pauli measurement setting.

    Appends the (noisy) basis-change gates, simulates, samples ``shots``
    outcomes (or evaluates exactly when ``shots`` is None), and reports
    expectations for the requested observables plus, by default, every
    weight-one observable of the setting.
    """
    n = circuit.num_qubits
    if len(setting) == 1:
        setting = setting * n
    targets = list(observables)
    if include_weight_one:
        seen = {o.paulis for o in targets}
        for q in range(n):
            w1 = weight_one(n, q, setting[q])
            if w1.paulis not in seen:
                targets.append(w1)
    diag = [PauliObservable(_diagonalized(o.paulis, setting), o.coefficient) for o in targets]
    measured = append_measurement_basis(circuit, setting)
    rho = simulate(measured, noise)
    if shots is None:
        weights = _diag_distribution(rho, noise)
        expectations = {
            t.paulis: d.coefficient * _z_mask_expectation(weights, n, d.support())
            for t, d in zip(targets, diag)
        }
        return ExecutionResult(expectations, None, 0, seed, setting)
    res = sample_counts(rho, shots, noise, seed, observables=diag)
    expectations = {t.paulis: res.expectations[d.paulis] for t, d in zip(targets, diag)}
    return ExecutionResult(expectations, res.counts, shots, seed, setting)


# -- executors -------------------------------------------------------------------


@dataclass
class ExecutionLedger:
    """Counts quantum workload in units of full-shot circuit executions."""

    jobs: int = 0
    total_shots: int = 0

    def record(self, shots: int) -> None:
        self.jobs += 1
        self.total_shots += shots

    def executions(self, base_shots: int) -> float:
        return self.total_shots / base_shots


@dataclass
class SimulatorExecutor:
    """Noisy-backend stand-in: executes circuits with finite shots.

    ``shots=None`` runs in exact (infinite-shot) mode.  Any object with the
    same ``execute`` signature can drive the mitigation pipeline (replay
    files, remote backends, ...).
    """

    noise: NoiseModel | None
    shots: int | None = 10_000
    ledger: ExecutionLedger = field(default_factory=ExecutionLedger)

    def execute(
        self,
        circuit: Circuit,
        observables: list[PauliObservable],
        seed: int,
        setting: str | None = None,
        shots: int | None = None,
    ) -> ExecutionResult:
        if setting is None:
            setting = derive_setting(observables, circuit.num_qubits)
        use_shots = self.shots if shots is None else shots
        self.ledger.record(use_shots or 0)
        return run_measurement(circuit, setting, observables, self.noise, use_shots, seed)


@dataclass
class IdealExecutor:
    """Exact noiseless expectation values (classical reference)."""

    def execute(
        self,
        circuit: Circuit,
        observables: list[PauliObservable],
        seed: int = 0,
        setting: str | None = None,
        shots: int | None = None,
    ) -> ExecutionResult:
        rho = simulate(circuit, noise=None)
        vals = {o.paulis: expectation(rho, o) for o in observables}
        return ExecutionResult(vals, None, 0, seed, setting)
