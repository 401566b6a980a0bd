"""Mimicry: train the model on ZNE outputs instead of ideal simulations.

Desk-scale replica of the for-scale protocol: Pauli-twirled ZNE (shot
budget split across twirls) supervises a forest on Trotterized Ising
circuits; the test metric is the residual between model and ZNE outputs.
A Clifford parameter point (j = 0, h = pi/2) anchors ZNE accuracy against
exactly computable expectations.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ...circuits import fold_two_qubit_gates
from ...generators import TfimParams, tfim_free_field_expectations, trotter_tfim
from ...mitigation import (
    collect_training_rows,
    extrapolate_to_zero,
    fit_mitigator,
    mlqem_mitigate,
    overhead_report,
    twirl_averaged_execute,
)
from ...seeding import derive_seed
from ..metrics import bootstrap_mean_ci, l2_error, write_csv
from ...circuits import weight_one
from ..pipeline import Executors, default_layout, model_fit_params, write_manifest


@dataclass
class MimicryResult:
    residual_by_step: dict[int, tuple[float, float, float, int]]  # mean, lo, hi, n
    zne_vs_ideal_by_step: dict[int, float]
    unmit_vs_ideal_by_step: dict[int, float]
    clifford_zne_err: float
    clifford_unmit_err: float
    overhead: dict


def _circuits(config, n, h, steps, j_values, tag):
    out = []
    for step in steps:
        for ji, j in enumerate(j_values):
            circ = trotter_tfim(TfimParams(n, step, j, h))
            circ.metadata["id"] = f"{tag}-s{step:02d}-j{ji:03d}"
            out.append((step, circ))
    return out


def run(config, out_dir=None) -> MimicryResult:
    n = int(config.param("n_qubits", 8))
    h = float(config.param("h", 0.66 * math.pi))
    max_step = int(config.param("max_step", 10))
    n_train_j = int(config.param("n_train_couplings", 10))
    n_test_j = int(config.param("n_test_couplings", 40))
    twirls = int(config.zne.get("twirls", 5)) or 5
    zne_cfg = config.zne_config()
    if zne_cfg.twirls == 0:
        from ...mitigation import ZneConfig

        zne_cfg = ZneConfig(zne_cfg.factors, zne_cfg.extrapolation, twirls)
    noise = config.noise_model(_defaults={"coherent_on": True})
    ex = Executors(noise, config.shots)
    layout = default_layout(n, config)
    steps = list(range(1, max_step + 1))
    # mirror the for-scale protocol: Z on a handful of evenly spaced qubits
    n_obs = min(n, int(config.param("n_observables", 5)))
    measured = sorted({int(q) for q in np.linspace(0, n - 1, n_obs).round()})
    obs = [weight_one(n, q, "Z") for q in measured]
    setting = "Z" * n

    rng = np.random.default_rng(derive_seed(config.seed, "train-couplings"))
    train_j = rng.uniform(0.0, h, n_train_j)
    rng = np.random.default_rng(derive_seed(config.seed, "test-couplings"))
    test_j = rng.uniform(0.0, h, n_test_j)

    train = _circuits(config, n, h, steps, train_j, "train")
    rows = collect_training_rows(
        [c for _, c in train],
        [obs] * len(train),
        ex.train,
        "zne_mimic",
        derive_seed(config.seed, "collect"),
        zne_cfg=zne_cfg,
        layout=layout,
        settings=[setting] * len(train),
    )
    kind = config.models[0]
    mitig = fit_mitigator(
        rows, [c for _, c in train], kind, derive_seed(config.seed, "fit"),
        mode=config.param("model_mode", "per_slot"),
        fit_params=model_fit_params(config), noise=noise,
    )

    test = _circuits(config, n, h, steps, test_j, "test")
    residuals: dict[int, list[float]] = {s: [] for s in steps}
    zne_err: dict[int, list[float]] = {s: [] for s in steps}
    unmit_err: dict[int, list[float]] = {s: [] for s in steps}
    factors = zne_cfg.factors
    for idx, (step, circ) in enumerate(test):
        seed_c = derive_seed(config.seed, "test", idx)
        noisy = twirl_averaged_execute(
            circ, obs, ex.deploy, zne_cfg.twirls, derive_seed(seed_c, "f", 1),
            setting=setting,
        )
        per_factor = {1: noisy.expectations}
        for f in factors[1:]:
            folded = fold_two_qubit_gates(circ, f)
            resf = twirl_averaged_execute(
                folded, obs, ex.eval, zne_cfg.twirls, derive_seed(seed_c, "f", f),
                setting=setting,
            )
            per_factor[f] = resf.expectations
        zne_vals = {
            o.paulis: extrapolate_to_zero(
                list(factors), [per_factor[f][o.paulis] for f in factors]
            )
            for o in obs
        }
        rf_vals = mlqem_mitigate(mitig, circ, obs, noisy)
        ideal = ex.ideal.execute(circ, obs).expectations
        residuals[step].append(l2_error(rf_vals, zne_vals))
        zne_err[step].append(l2_error(zne_vals, ideal))
        unmit_err[step].append(l2_error({k: noisy.expectations[k] for k in ideal}, ideal))

    residual_by_step = {}
    for s in steps:
        mean, lo, hi = bootstrap_mean_ci(
            residuals[s], derive_seed(config.seed, "boot", s)
        )
        residual_by_step[s] = (mean, lo, hi, len(residuals[s]))

    # Clifford anchor: j = 0, h = pi/2 makes the circuit Clifford with
    # exactly known (+-1) expectations from the free-field closed form
    cliff_zne, cliff_unmit = [], []
    for step in steps:
        params = TfimParams(n, step, 0.0, 0.5 * math.pi)
        circ = trotter_tfim(params)
        free = tfim_free_field_expectations(params)
        exact = {o.paulis: free[q] for q, o in zip(measured, obs)}
        seed_c = derive_seed(config.seed, "clifford", step)
        noisy = twirl_averaged_execute(
            circ, obs, ex.eval, zne_cfg.twirls, derive_seed(seed_c, "f", 1), setting=setting
        )
        per_factor = {1: noisy.expectations}
        for f in factors[1:]:
            folded = fold_two_qubit_gates(circ, f)
            per_factor[f] = twirl_averaged_execute(
                folded, obs, ex.eval, zne_cfg.twirls, derive_seed(seed_c, "f", f),
                setting=setting,
            ).expectations
        zne_vals = {
            o.paulis: extrapolate_to_zero(
                list(factors), [per_factor[f][o.paulis] for f in factors]
            )
            for o in obs
        }
        cliff_zne.append(l2_error(zne_vals, exact))
        cliff_unmit.append(l2_error({k: noisy.expectations[k] for k in exact}, exact))

    oh = overhead_report(len(train), len(test), len(factors), train_needs_mitigation=True)
    result = MimicryResult(
        residual_by_step,
        {s: float(np.mean(zne_err[s])) for s in steps},
        {s: float(np.mean(unmit_err[s])) for s in steps},
        float(np.mean(cliff_zne)),
        float(np.mean(cliff_unmit)),
        oh.__dict__,
    )
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(
            os.path.join(out_dir, "metrics.csv"),
            ["step", "rf_zne_residual", "ci_lo", "ci_hi", "n", "zne_vs_ideal", "unmit_vs_ideal"],
            [
                [s, *residual_by_step[s], result.zne_vs_ideal_by_step[s],
                 result.unmit_vs_ideal_by_step[s]]
                for s in steps
            ],
        )
        write_manifest(
            out_dir, config, ex,
            {
                "overhead": result.overhead,
                "clifford_anchor": {
                    "zne_err": result.clifford_zne_err,
                    "unmit_err": result.clifford_unmit_err,
                },
            },
        )
    return result
