"""Mitigating Pauli observables never seen in training.

One fixed Trotterized Ising circuit; every non-identity Pauli string is
measured once under its canonical setting (identities filled with Z), the
shared-feature model is trained on a small sampled fraction, and the
remaining observables are mitigated and compared against ZNE on the same
set.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

import numpy as np

from ...circuits import PauliObservable, fold_two_qubit_gates
from ...features import DatasetRow, encode
from ...generators import TfimParams, trotter_tfim
from ...mitigation import extrapolate_to_zero, fit_mitigator
from ...seeding import derive_seed
from ...sim import expectation, simulate
from ..metrics import write_csv
from ..pipeline import Executors, default_layout, model_fit_params, write_manifest


@dataclass
class UnseenResult:
    # (fraction, method) -> mean abs error over unseen observables
    curve: dict[tuple[float, str], float]
    n_total: int


def _canonical_setting(pauli: str) -> str:
    return pauli.replace("I", "Z")


def run(config, out_dir=None) -> UnseenResult:
    n = int(config.param("n_qubits", 6))
    h = float(config.param("h", 0.66 * math.pi))
    ratio = float(config.param("j_over_h", 0.15))
    steps = int(config.param("steps", 5))
    fractions = list(config.param("fractions", [0.005, 0.01, 0.02, 0.05]))
    zne_cfg = config.zne_config()
    noise = config.noise_model(_defaults={"coherent_on": False})
    ex = Executors(noise, config.shots)
    layout = default_layout(n, config)

    circuit = trotter_tfim(TfimParams(n, steps, ratio * h, h))
    circuit.metadata["id"] = "unseen-base"

    all_paulis = [
        "".join(p) for p in itertools.product("IXYZ", repeat=n) if set(p) != {"I"}
    ]
    groups: dict[str, list[str]] = {}
    for p in all_paulis:
        groups.setdefault(_canonical_setting(p), []).append(p)

    rho_ideal = simulate(circuit, noise=None)
    ideal = {p: expectation(rho_ideal, PauliObservable(p)) for p in all_paulis}

    noisy_val: dict[str, float] = {}
    zne_val: dict[str, float] = {}
    result_of: dict[str, object] = {}
    folded = fold_two_qubit_gates(circuit, zne_cfg.factors[-1])
    for gi, setting in enumerate(sorted(groups)):
        obs = [PauliObservable(p) for p in groups[setting]]
        res1 = ex.deploy.execute(
            circuit, obs, derive_seed(config.seed, "meas", setting), setting=setting
        )
        res3 = ex.eval.execute(
            folded, obs, derive_seed(config.seed, "fold", setting), setting=setting
        )
        for p in groups[setting]:
            noisy_val[p] = res1.expectations[p]
            zne_val[p] = extrapolate_to_zero(
                [zne_cfg.factors[0], zne_cfg.factors[-1]],
                [res1.expectations[p], res3.expectations[p]],
            )
            result_of[p] = res1

    def rows_for(paulis: list[str], split: str) -> list[DatasetRow]:
        out = []
        for p in paulis:
            fv = encode(circuit, PauliObservable(p), result_of[p], layout=layout)
            out.append(
                DatasetRow(fv, ideal[p], "unseen-base", p, split, noisy=noisy_val[p])
            )
        return out

    curve: dict[tuple[float, str], float] = {}
    for frac in fractions:
        k = max(1, int(round(frac * len(all_paulis))))
        rng = np.random.default_rng(derive_seed(config.seed, "sample", repr(frac)))
        seen_idx = set(rng.choice(len(all_paulis), size=k, replace=False).tolist())
        seen = [all_paulis[i] for i in sorted(seen_idx)]
        unseen = [p for i, p in enumerate(all_paulis) if i not in seen_idx]
        train_rows = rows_for(seen, "train")
        curve[(frac, "unmitigated")] = float(
            np.mean([abs(noisy_val[p] - ideal[p]) for p in unseen])
        )
        curve[(frac, "zne")] = float(
            np.mean([abs(zne_val[p] - ideal[p]) for p in unseen])
        )
        for kind in config.models:
            mitig = fit_mitigator(
                train_rows,
                [circuit] * len(train_rows),
                kind,
                derive_seed(config.seed, "fit", repr(frac), kind),
                mode="shared",
                fit_params=model_fit_params(config),
                noise=noise,
            )
            from ...models import predict

            model = mitig.model_for_slot(0)
            errs = []
            for p in unseen:
                fv = encode(circuit, PauliObservable(p), result_of[p], layout=layout)
                errs.append(abs(predict(model, fv) - ideal[p]))
            curve[(frac, kind)] = float(np.mean(errs))

    result = UnseenResult(curve, len(all_paulis))
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(
            os.path.join(out_dir, "metrics.csv"),
            ["fraction", "n_seen", "method", "mean_abs_error"],
            [
                [frac, int(round(frac * len(all_paulis))), method, err]
                for (frac, method), err in sorted(curve.items())
            ],
        )
        write_manifest(out_dir, config, ex, {"n_observables": len(all_paulis)})
    return result
