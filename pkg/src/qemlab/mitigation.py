"""Mitigation engines and cost accounting.

Two mitigation routes share one executor abstraction:

- digital ZNE: fold 2-qubit gates by odd factors, optionally average over
  Pauli-twirled instances (splitting the shot budget), then extrapolate a
  least-squares line to zero noise factor;
- ML-QEM: regression models trained on (noisy features -> target) pairs,
  where targets come either from noiseless simulation or from mimicking a
  conventional mitigator's outputs.

Plus the closed-form overhead/cost expressions used for method comparison
(break-even split, PEC shot bound and runtime, ZNE sampling cost).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .circuits import Circuit, PauliObservable, fold_two_qubit_gates, pauli_twirl
from .features import DatasetRow, FeatureLayout, encode
from .models import (
    MitigationModel,
    fit_mlp,
    fit_ols,
    fit_rf,
    model_kind,
    predict,
)
from .seeding import derive_seed
from .sim import ExecutionResult, IdealExecutor, NoiseModel, derive_setting


# -- zero-noise extrapolation -----------------------------------------------------


@dataclass(frozen=True)
class ZneConfig:
    factors: tuple[int, ...] = (1, 3)
    extrapolation: str = "linear"
    twirls: int = 0

    def __post_init__(self):
        if not self.factors or self.factors[0] != 1:
            raise ValueError("noise factors must start at 1")
        if list(self.factors) != sorted(self.factors):
            raise ValueError("noise factors must be ascending")
        if any(f < 1 or f % 2 == 0 for f in self.factors):
            raise ValueError("noise factors must be odd positive integers")
        if self.extrapolation != "linear":
            raise ValueError(f"unsupported extrapolation {self.extrapolation!r}")
        if self.twirls < 0:
            raise ValueError("twirls must be >= 0")


@dataclass
class ZneResult:
    mitigated: dict[str, float]
    factor_values: dict[int, dict[str, float]]


def extrapolate_to_zero(factors, values) -> float:
    """Least-squares line through (factor, value), evaluated at factor 0."""
    slope, intercept = np.polyfit(np.asarray(factors, float), np.asarray(values, float), 1)
    return float(intercept)


def twirl_averaged_execute(
    circuit: Circuit,
    observables: list[PauliObservable],
    executor,
    twirls: int,
    seed: int,
    setting: str | None = None,
) -> ExecutionResult:
    """Average expectations over Pauli-twirled instances of one circuit.

    The executor's shot budget is split across the instances, so the whole
    average costs one full execution.
    """
    base = getattr(executor, "shots", None)
    split = None if base is None else max(1, base // twirls)
    acc: dict[str, float] = {}
    use_setting = setting or derive_setting(observables, circuit.num_qubits)
    for t in range(twirls):
        inst = pauli_twirl(circuit, derive_seed(seed, "twirl", t))
        res = executor.execute(
            inst, observables, derive_seed(seed, "exec", t),
            setting=use_setting, shots=split,
        )
        for key, val in res.expectations.items():
            acc[key] = acc.get(key, 0.0) + val / twirls
    return ExecutionResult(acc, None, 0 if base is None else base, seed, use_setting)


def zne_mitigate(
    circuit: Circuit,
    observables: list[PauliObservable],
    executor,
    cfg: ZneConfig = ZneConfig(),
    seed: int = 0,
    setting: str | None = None,
) -> ZneResult:
    """Digital ZNE for every observable of one circuit.

    With ``cfg.twirls`` > 0 each noise factor is averaged over that many
    Pauli-twirled instances, splitting the executor's shot budget across
    the instances so one factor still costs one full execution.
    """
    factor_values: dict[int, dict[str, float]] = {}
    for f in cfg.factors:
        folded = fold_two_qubit_gates(circuit, f)
        if cfg.twirls > 0:
            res = twirl_averaged_execute(
                folded, observables, executor, cfg.twirls,
                derive_seed(seed, "factor", f), setting=setting,
            )
        else:
            res = executor.execute(
                folded, observables, derive_seed(seed, "exec", f), setting=setting
            )
        factor_values[f] = dict(res.expectations)
    mitigated = {}
    for obs in observables:
        vals = [factor_values[f][obs.paulis] for f in cfg.factors]
        mitigated[obs.paulis] = extrapolate_to_zero(cfg.factors, vals)
    return ZneResult(mitigated, factor_values)


# -- ML-QEM -------------------------------------------------------------------------


@dataclass
class TrainedMitigator:
    """A fitted model (or per-observable-slot family) plus its encoder config."""

    kind: str
    mode: str  # "shared" | "per_slot"
    models: dict[int, MitigationModel]
    layout: FeatureLayout
    noise: NoiseModel | None = None
    training_rows: list[DatasetRow] = field(default_factory=list)

    def model_for_slot(self, slot: int) -> MitigationModel:
        return self.models[0 if self.mode == "shared" else slot]


def _fit_kind(kind: str, rows: list[DatasetRow], seed: int, params: dict):
    if kind == "ols":
        return fit_ols(rows)
    if kind == "rf":
        return fit_rf(rows, seed=seed, **params.get("rf", {}))
    if kind == "mlp":
        return fit_mlp(rows, seed=seed, **params.get("mlp", {}))
    raise ValueError(f"unknown model kind {kind!r}")


def collect_training_rows(
    circuits: list[Circuit],
    observables: list[list[PauliObservable]],
    executor,
    target_source: str,
    seed: int,
    zne_cfg: ZneConfig | None = None,
    ideal_executor: IdealExecutor | None = None,
    layout: FeatureLayout | None = None,
    settings: list[str] | None = None,
    split: str = "train",
) -> list[DatasetRow]:
    """Execute every circuit once and build the supervised dataset.

    ``target_source`` selects the supervision: "ideal_sim" trains towards
    exact noiseless values, "zne_mimic" towards ZNE outputs (features then
    use the twirl-averaged factor-1 expectations).
    """
    if not circuits:
        raise ValueError("empty circuit set")
    if target_source not in ("ideal_sim", "zne_mimic"):
        raise ValueError(f"unknown target source {target_source!r}")
    if target_source == "zne_mimic" and zne_cfg is None:
        raise ValueError("zne_mimic training requires a ZneConfig")
    if target_source == "ideal_sim" and ideal_executor is None:
        ideal_executor = IdealExecutor()
    n = circuits[0].num_qubits
    if layout is None:
        layout = FeatureLayout(n)

    rows: list[DatasetRow] = []
    for ci, (circ, obs_list) in enumerate(zip(circuits, observables)):
        setting = settings[ci] if settings else None
        cseed = derive_seed(seed, "train", ci)
        if target_source == "ideal_sim":
            noisy = executor.execute(circ, obs_list, cseed, setting=setting)
            ideal = ideal_executor.execute(circ, obs_list)
            targets = ideal.expectations
        else:
            use_setting = setting or derive_setting(obs_list, n)
            zr = zne_mitigate(circ, obs_list, executor, zne_cfg, cseed, setting=use_setting)
            noisy = ExecutionResult(
                zr.factor_values[1], None, getattr(executor, "shots", 0), cseed, use_setting
            )
            targets = zr.mitigated
        for slot, obs in enumerate(obs_list):
            fv = encode(circ, obs, noisy, layout=layout)
            rows.append(
                DatasetRow(
                    features=fv,
                    target=float(targets[obs.paulis]),
                    circuit_id=circ.metadata.get("id", f"c{ci:05d}"),
                    observable=obs.paulis,
                    split=split,
                    noisy=noisy.expectations[obs.paulis],
                )
            )
    return rows


def fit_mitigator(
    rows: list[DatasetRow],
    circuits: list[Circuit],
    model_kind_name: str,
    seed: int,
    mode: str = "per_slot",
    fit_params: dict | None = None,
    noise: NoiseModel | None = None,
) -> TrainedMitigator:
    """Fit one shared model or one model per observable slot from the rows.

    Rows are assumed to be emitted circuit-by-circuit with a constant
    number of observable slots per circuit (as ``collect_training_rows``
    produces them).
    """
    if not rows:
        raise ValueError("empty dataset")
    fit_params = fit_params or {}
    layout = rows[0].features.layout
    n_slots = len(rows) // len(circuits)
    models: dict[int, MitigationModel] = {}
    if mode == "shared":
        models[0] = _fit_kind(model_kind_name, rows, derive_seed(seed, "fit"), fit_params)
    elif mode == "per_slot":
        for slot in range(n_slots):
            slot_rows = rows[slot::n_slots]
            models[slot] = _fit_kind(
                model_kind_name, slot_rows, derive_seed(seed, "fit", slot), fit_params
            )
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return TrainedMitigator(
        kind=model_kind_name,
        mode=mode,
        models=models,
        layout=layout,
        noise=noise,
        training_rows=rows,
    )


def mlqem_train(
    circuits: list[Circuit],
    observables: list[list[PauliObservable]],
    executor,
    target_source: str,
    model_kind_name: str,
    seed: int,
    zne_cfg: ZneConfig | None = None,
    ideal_executor: IdealExecutor | None = None,
    mode: str = "per_slot",
    layout: FeatureLayout | None = None,
    settings: list[str] | None = None,
    fit_params: dict | None = None,
    split: str = "train",
) -> TrainedMitigator:
    """Collect the training dataset and fit the requested model in one step."""
    rows = collect_training_rows(
        circuits, observables, executor, target_source, seed,
        zne_cfg=zne_cfg, ideal_executor=ideal_executor, layout=layout,
        settings=settings, split=split,
    )
    return fit_mitigator(
        rows, circuits, model_kind_name, seed, mode=mode, fit_params=fit_params,
        noise=getattr(executor, "noise", None),
    )


def mlqem_mitigate(
    mitigator: TrainedMitigator,
    circuit: Circuit,
    observables: list[PauliObservable],
    noisy: ExecutionResult,
) -> dict[str, float]:
    """One encode + predict per observable; no extra circuit executions."""
    out: dict[str, float] = {}
    for slot, obs in enumerate(observables):
        fv = encode(circuit, obs, noisy, layout=mitigator.layout)
        model = mitigator.model_for_slot(slot)
        if model.layout_fingerprint != mitigator.layout.fingerprint:
            raise ValueError(
                f"model layout {model.layout_fingerprint} does not match "
                f"encoder layout {mitigator.layout.fingerprint}"
            )
        out[obs.paulis] = predict(model, fv)
    return out


# -- overhead and cost formulas ------------------------------------------------------


@dataclass(frozen=True)
class OverheadReport:
    total_executions_qem: int
    total_executions_ml: int
    overall_reduction: float
    runtime_reduction: float
    breakeven_ratio: float


def overhead_report(
    n_train: int, n_test: int, m: int, train_needs_mitigation: bool
) -> OverheadReport:
    """Execution-count comparison of ML-QEM against an m-factor QEM method."""
    if n_train <= 0 or n_test <= 0 or m <= 0:
        raise ValueError("counts must be positive")
    qem = m * n_test
    ml = (m if train_needs_mitigation else 1) * n_train + n_test
    return OverheadReport(
        total_executions_qem=qem,
        total_executions_ml=ml,
        overall_reduction=float(1 - Fraction(ml, qem)),
        runtime_reduction=float(1 - Fraction(1, m)),
        breakeven_ratio=float(Fraction(m - 1, m)),
    )


def pec_shot_bound(gamma_total: float, eps: float, delta: float = 0.01, approx: bool = False) -> int:
    """Minimum shots for PEC to reach additive error eps with confidence 1-delta.

    Hoeffding form N = ceil(2 ln(2/delta) (gamma/eps)^2); ``approx`` uses the
    flat 4 (gamma/eps)^2 variant quoted for delta ~ 0.01.
    """
    if eps <= 0 or not 0 < delta < 1 or gamma_total < 1:
        raise ValueError("require eps > 0, 0 < delta < 1, gamma_total >= 1")
    ratio = (gamma_total / eps) ** 2
    if approx:
        return math.ceil(4.0 * ratio)
    return math.ceil(2.0 * math.log(2.0 / delta) * ratio)


@dataclass(frozen=True)
class PecRuntime:
    seconds: float
    log10_seconds: float
    feasible: bool


def pec_runtime(n: int, l: int, gamma_bar: float, beta_seconds: float) -> PecRuntime:
    """PEC runtime gamma_bar^(n*l) * beta * l, safe against overflow.

    Infeasible regimes report log10 of the runtime instead of overflowing.
    """
    if gamma_bar < 1:
        raise ValueError("gamma_bar must be >= 1")
    log10_val = n * l * math.log10(gamma_bar) + math.log10(beta_seconds * l)
    if log10_val > 300:
        return PecRuntime(math.inf, log10_val, False)
    return PecRuntime(10.0**log10_val, log10_val, True)


def zne_sampling_cost(n_gates: int, eps: float, r: float) -> float:
    """Sampling cost of 2-point exponential-decay ZNE at amplification r."""
    if r <= 1:
        raise ValueError("amplification r must exceed 1")
    return (r * r * math.exp(2 * n_gates * eps) + math.exp(2 * n_gates * r * eps)) / (r - 1) ** 2


def gamma_from_lambdas(lambdas) -> float:
    """Per-layer PEC sampling overhead gamma_i = exp(2 sum_k lambda_k)."""
    return math.exp(2.0 * float(np.sum(lambdas)))
