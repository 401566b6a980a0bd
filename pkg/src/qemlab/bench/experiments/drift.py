"""Adapting a trained model to a drifted noise profile.

Trains an MLP on noise model A, then compares fine-tuning it with
increasing amounts of data from noise model B against models trained from
scratch on B alone (MLP and RF).  Errors are evaluated on held-out B
circuits; the learning curves expose how many new-noise samples each route
needs to converge.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

from ...generators import TfimParams, trotter_tfim
from ...mitigation import TrainedMitigator, collect_training_rows, mlqem_mitigate
from ...models import fine_tune, fit_mlp, fit_rf
from ...seeding import derive_seed
from ...sim import SimulatorExecutor
from ..metrics import bootstrap_mean_ci, l2_error, write_csv
from ..pipeline import Executors, Job, default_layout, pick_basis, weight_one_set, write_manifest

import numpy as np


@dataclass
class DriftResult:
    # (samples, method) -> (mean, lo, hi, n)
    curve: dict[tuple[int, str], tuple[float, float, float, int]]
    sweep: list[int]


def _tfim_jobs(config, n, h, steps, count_per_step, tag, interleave=False) -> list[Job]:
    jobs = []
    order = (
        [(i, s) for i in range(count_per_step) for s in steps]
        if interleave
        else [(i, s) for s in steps for i in range(count_per_step)]
    )
    for idx, (i, step) in enumerate(order):
        seed = derive_seed(config.seed, tag, step, i)
        rng = np.random.default_rng(seed)
        j = float(rng.uniform(0.0, h))
        circ = trotter_tfim(TfimParams(n, step, j, h))
        circ.metadata["id"] = f"{tag}-s{step:02d}-{i:04d}"
        basis = pick_basis(derive_seed(config.seed, tag, "basis", step, i))
        jobs.append(Job(circ, weight_one_set(n, basis), basis * n, step, tag, idx))
    return jobs


def _collect(config, jobs, executor, layout, tag):
    return collect_training_rows(
        [j.circuit for j in jobs],
        [j.observables for j in jobs],
        executor,
        "ideal_sim",
        derive_seed(config.seed, "collect", tag),
        layout=layout,
        settings=[j.setting for j in jobs],
    )


def run(config, out_dir=None) -> DriftResult:
    n = int(config.param("n_qubits", 4))
    h = float(config.param("h", math.pi / 4))
    steps = list(range(1, int(config.param("max_step", 10)) + 1))
    per_step_a = int(config.param("n_train_a_per_step", 220))
    pool_per_step = int(config.param("n_pool_b_per_step", 40))
    test_per_step = int(config.param("n_test_b_per_step", 30))
    sweep = list(config.param("sweep", [0, 10, 25, 50, 100, 200, 300, 400]))
    mlp_epochs = int(config.param("mlp_epochs", 150))
    ft_epochs = int(config.param("finetune_epochs", 80))
    noise_a = config.noise_model(**config.param("noise_a", {"preset": "lima-like", "coherent_on": False}))
    noise_b = config.noise_model(**config.param("noise_b", {"preset": "belem-like", "coherent_on": False}))
    layout = default_layout(n, config)

    ex_a = SimulatorExecutor(noise_a, config.shots)
    ex_b = Executors(noise_b, config.shots)

    jobs_a = _tfim_jobs(config, n, h, steps, per_step_a, "train-a")
    rows_a = _collect(config, jobs_a, ex_a, layout, "a")
    mlp_a = fit_mlp(rows_a, epochs=mlp_epochs, seed=derive_seed(config.seed, "mlp-a"))

    pool_jobs = _tfim_jobs(config, n, h, steps, pool_per_step, "pool-b", interleave=True)
    pool_rows = _collect(config, pool_jobs, ex_b.train, layout, "b-pool")
    slots = len(pool_jobs[0].observables)

    test_jobs = _tfim_jobs(config, n, h, steps, test_per_step, "test-b")
    test_noisy = [
        ex_b.deploy.execute(
            j.circuit, j.observables, derive_seed(config.seed, "deploy", j.index),
            setting=j.setting,
        )
        for j in test_jobs
    ]
    test_ideal = [
        ex_b.ideal.execute(j.circuit, j.observables).expectations for j in test_jobs
    ]

    def as_mitigator(model, kind) -> TrainedMitigator:
        return TrainedMitigator(kind, "shared", {0: model}, layout, noise_b)

    def test_errors(model, kind) -> list[float]:
        mitig = as_mitigator(model, kind)
        errs = []
        for job, noisy, ideal in zip(test_jobs, test_noisy, test_ideal):
            vals = mlqem_mitigate(mitig, job.circuit, job.observables, noisy)
            errs.append(l2_error(vals, ideal))
        return errs

    curve: dict[tuple[int, str], tuple[float, float, float, int]] = {}

    def add(samples, method, errs):
        mean, lo, hi = bootstrap_mean_ci(
            errs, derive_seed(config.seed, "boot", samples, method)
        )
        curve[(samples, method)] = (mean, lo, hi, len(errs))

    for k in sweep:
        rows_k = pool_rows[: k * slots]
        ft = fine_tune(
            mlp_a, rows_k, epochs=ft_epochs, seed=derive_seed(config.seed, "ft", k)
        )
        add(k, "mlp_finetune", test_errors(ft, "mlp"))
        if k > 0:
            scratch = fit_mlp(
                rows_k, epochs=mlp_epochs, seed=derive_seed(config.seed, "scratch", k)
            )
            add(k, "mlp_scratch", test_errors(scratch, "mlp"))
            rf = fit_rf(
                rows_k,
                max_features=config.param("rf_max_features", "all"),
                seed=derive_seed(config.seed, "rf", k),
            )
            add(k, "rf_scratch", test_errors(rf, "rf"))

    unmit_errs = [
        l2_error({p: noisy.expectations[p] for p in ideal}, ideal)
        for noisy, ideal in zip(test_noisy, test_ideal)
    ]
    add(max(sweep), "unmitigated", unmit_errs)

    result = DriftResult(curve, sweep)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(
            os.path.join(out_dir, "metrics.csv"),
            ["method", "bucket", "mean_error", "ci_lo", "ci_hi", "n"],
            [
                [method, samples, *vals]
                for (samples, method), vals in sorted(
                    curve.items(), key=lambda kv: (kv[0][1], kv[0][0])
                )
            ],
        )
        write_manifest(out_dir, config, ex_b, {"n_train_a": len(jobs_a)})
    return result
