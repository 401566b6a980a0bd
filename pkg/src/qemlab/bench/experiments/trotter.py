"""Trotterized Ising benchmark over three noise tiers, with the test circuits
split into interpolation (steps seen in training) and extrapolation (deeper).

Couplings J are sampled uniformly below the field h per circuit; every
circuit is measured in one randomly chosen Pauli basis for all weight-one
observables.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from ...generators import TfimParams, trotter_tfim
from ...mitigation import collect_training_rows, fit_mitigator
from ...seeding import derive_seed
from ..metrics import bootstrap_mean_ci, write_csv
from ..pipeline import (
    Executors,
    Job,
    default_layout,
    evaluate_jobs,
    model_fit_params,
    pick_basis,
    weight_one_set,
    write_manifest,
)

TIERS = {
    "incoherent": {"readout_on": False, "coherent_on": False},
    "readout": {"readout_on": True, "coherent_on": False},
    "coherent": {"readout_on": True, "coherent_on": True},
}


@dataclass
class TrotterResult:
    # (tier, split, step, method) -> (mean, lo, hi, n)
    table: dict[tuple[str, str, int, str], tuple[float, float, float, int]]
    tiers: list[str]


def _jobs(config, n, h, steps, count, split_of, tag) -> list[Job]:
    jobs = []
    idx = 0
    for step in steps:
        for i in range(count):
            seed = derive_seed(config.seed, tag, step, i)
            rng = np.random.default_rng(seed)
            j = float(rng.uniform(0.0, h))
            circ = trotter_tfim(TfimParams(n, step, j, h))
            circ.metadata["id"] = f"{tag}-s{step:02d}-{i:04d}"
            basis = pick_basis(derive_seed(config.seed, tag, "basis", step, i))
            jobs.append(
                Job(circ, weight_one_set(n, basis), basis * n, step, split_of(step), idx)
            )
            idx += 1
    return jobs


def run(config, out_dir=None) -> TrotterResult:
    n = int(config.param("n_qubits", 4))
    h = float(config.param("h", math.pi / 4))
    max_step = int(config.param("max_step", 12))
    s_max = int(config.param("train_max_step", 8))
    n_train = int(config.param("n_train", 100))
    n_test = int(config.param("n_test", 40))
    tiers = list(config.param("tiers", list(TIERS)))
    zne_cfg = config.zne_config()
    layout = default_layout(n, config)

    steps = list(range(1, max_step + 1))
    train_steps = [s for s in steps if s <= s_max]

    table: dict[tuple[str, str, int, str], tuple[float, float, float, int]] = {}
    ledgers = {}
    for tier in tiers:
        noise = config.noise_model(**TIERS[tier])
        ex = Executors(noise, config.shots)
        train_jobs = _jobs(
            config, n, h, train_steps, n_train, lambda s: "train", f"train-{tier}"
        )
        test_jobs = _jobs(
            config, n, h, steps, n_test,
            lambda s: "interp" if s <= s_max else "extrap", f"test-{tier}",
        )
        rows = collect_training_rows(
            [j.circuit for j in train_jobs],
            [j.observables for j in train_jobs],
            ex.train,
            "ideal_sim",
            derive_seed(config.seed, "collect", tier),
            layout=layout,
            settings=[j.setting for j in train_jobs],
        )
        mitigators = {
            kind: fit_mitigator(
                rows,
                [j.circuit for j in train_jobs],
                kind,
                derive_seed(config.seed, "fit", tier, kind),
                mode=config.param("model_mode", "per_slot"),
                fit_params=model_fit_params(config),
                noise=noise,
            )
            for kind in config.models
        }
        records = evaluate_jobs(
            test_jobs, mitigators, ex, zne_cfg, derive_seed(config.seed, "eval", tier)
        )
        by_key: dict[tuple, list[float]] = {}
        for rec in records:
            by_key.setdefault((rec.job.split, rec.job.bucket, rec.method), []).append(
                rec.error
            )
        for (split, step, method), errs in sorted(by_key.items()):
            mean, lo, hi = bootstrap_mean_ci(
                errs, derive_seed(config.seed, "boot", tier, split, step, method)
            )
            table[(tier, split, step, method)] = (mean, lo, hi, len(errs))
        ledgers[tier] = ex.ledgers()

    result = TrotterResult(table, tiers)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(
            os.path.join(out_dir, "metrics.csv"),
            ["tier", "split", "step", "method", "mean_error", "ci_lo", "ci_hi", "n"],
            [
                [tier, split, step, method, *vals]
                for (tier, split, step, method), vals in sorted(table.items())
            ],
        )
        write_manifest(out_dir, config, None, {"ledgers_by_tier": ledgers})
    return result
