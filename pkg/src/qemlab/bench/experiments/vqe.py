"""Variational ground-energy estimation for H2 with mitigated objectives.

The model is trained once, ahead of the optimization, on randomly sampled
ansatz parameters measured for XX and ZZ only; at deployment it also
mitigates the IZ/ZI terms it never saw.  Nelder-Mead (with restarts and an
evaluation budget) runs separately on the unmitigated, ZNE-mitigated, and
model-mitigated energy surfaces.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ...circuits import PauliObservable
from ...features import encode
from ...generators import (
    AnsatzParams,
    h2_hamiltonian,
    hamiltonian_matrix,
    load_h2_table,
    two_local_ansatz,
)
from ...mitigation import collect_training_rows, fit_mitigator, zne_mitigate
from ...models import predict
from ...seeding import derive_seed
from ..metrics import write_csv
from ..pipeline import Executors, default_layout, model_fit_params, write_manifest

_XX = PauliObservable("XX")
_ZZ_GROUP = [PauliObservable("ZZ"), PauliObservable("IZ"), PauliObservable("ZI")]


@dataclass
class VqeRow:
    bond_length: float
    e_exact: float
    energies: dict[str, float]  # method -> optimized energy
    zne_rf_gap: float
    converged: dict[str, bool]


@dataclass
class VqeResult:
    rows: list[VqeRow]
    noiseless_max_error: float | None


def _pauli_values(theta, ex, mitigator, layout, seed, use_zne, zne_cfg):
    """Noisy (or mitigated) expectations of XX, ZZ, IZ, ZI at one angle set."""
    circ = two_local_ansatz(AnsatzParams(tuple(theta)))
    if use_zne:
        z1 = zne_mitigate(circ, [_XX], ex.eval, zne_cfg, derive_seed(seed, "xx"), setting="XX")
        z2 = zne_mitigate(circ, _ZZ_GROUP, ex.eval, zne_cfg, derive_seed(seed, "zz"), setting="ZZ")
        # clamp to the physical range so the optimizer cannot chase
        # extrapolation overshoot below the true ground energy
        return {p: min(1.0, max(-1.0, v)) for p, v in {**z1.mitigated, **z2.mitigated}.items()}
    r1 = ex.deploy.execute(circ, [_XX], derive_seed(seed, "xx"), setting="XX")
    r2 = ex.deploy.execute(circ, _ZZ_GROUP, derive_seed(seed, "zz"), setting="ZZ")
    vals = {"XX": r1.expectations["XX"]}
    vals.update({o.paulis: r2.expectations[o.paulis] for o in _ZZ_GROUP})
    if mitigator is None:
        return vals
    model = mitigator.model_for_slot(0)
    out = {}
    for obs, res in [(_XX, r1)] + [(o, r2) for o in _ZZ_GROUP]:
        fv = encode(circ, obs, res, layout=layout)
        out[obs.paulis] = predict(model, fv)
    return out


def _energy_fn(terms, ex, mitigator, layout, seed_base, use_zne, zne_cfg, exact):
    coeffs = {t.paulis: t.coefficient for t in terms if t.paulis != "II"}
    offset = sum(t.coefficient for t in terms if t.paulis == "II")
    counter = [0]

    def fn(theta):
        counter[0] += 1
        if exact:
            circ = two_local_ansatz(AnsatzParams(tuple(theta)))
            res = ex.ideal.execute(circ, [_XX] + _ZZ_GROUP)
            vals = res.expectations
        else:
            vals = _pauli_values(
                theta, ex, mitigator, layout,
                derive_seed(seed_base, "eval", counter[0]), use_zne, zne_cfg,
            )
        return sum(c * vals[p] for p, c in coeffs.items()) + offset

    return fn


def _optimize(fn, seed, restarts, maxfev, x0_scale=2.0, noisy=True):
    """Nelder-Mead with seeded restarts under an evaluation budget.

    Noisy objectives carry ~1e-2 shot noise, so their convergence
    tolerances are set at that scale; the exact mode is tight.
    """
    opts = (
        {"maxfev": maxfev, "xatol": 2e-2, "fatol": 3e-3}
        if noisy
        else {"maxfev": maxfev, "xatol": 1e-4, "fatol": 1e-7}
    )
    best_val, best_x, any_success = np.inf, None, False
    for r in range(restarts):
        if r == 0:
            x0 = np.zeros(8)  # the |00> reference state (Hartree-Fock-like)
        else:
            rng = np.random.default_rng(derive_seed(seed, "x0", r))
            x0 = rng.uniform(-x0_scale, x0_scale, 8)
        res = minimize(fn, x0, method="Nelder-Mead", options=opts)
        any_success = any_success or bool(res.success)
        if res.fun < best_val:
            best_val, best_x = float(res.fun), res.x
    return best_val, best_x, any_success


def run(config, out_dir=None) -> VqeResult:
    table = load_h2_table(config.param("bond_table", None))
    bonds = list(config.param("bond_lengths", table.bond_lengths))
    n_per_obs = int(config.param("n_train_per_observable", 1000))
    restarts = int(config.param("restarts", 2))
    maxfev = int(config.param("maxfev", 300))
    noise = config.noise_model(_defaults={"coherent_on": False})
    zne_cfg = config.zne_config()
    ex = Executors(noise, config.shots)
    layout = default_layout(2, config)

    circuits, observables, settings = [], [], []
    for which, (obs_list, setting) in enumerate(
        [([_XX], "XX"), ([_ZZ_GROUP[0]], "ZZ")]
    ):
        for i in range(n_per_obs):
            rng = np.random.default_rng(derive_seed(config.seed, "theta", which, i))
            circ = two_local_ansatz(AnsatzParams(tuple(rng.uniform(-5.0, 5.0, 8))))
            circ.metadata["id"] = f"vqe-train-{setting}-{i:04d}"
            circuits.append(circ)
            observables.append(obs_list)
            settings.append(setting)
    rows = collect_training_rows(
        circuits, observables, ex.train, "ideal_sim",
        derive_seed(config.seed, "collect"), layout=layout, settings=settings,
    )
    mitigators = {
        kind: fit_mitigator(
            rows, circuits, kind, derive_seed(config.seed, "fit", kind),
            mode="shared", fit_params=model_fit_params(config), noise=noise,
        )
        for kind in config.models
    }

    out_rows: list[VqeRow] = []
    noiseless_errs = []
    check_noiseless = bool(config.param("check_noiseless", True))
    for bond in bonds:
        terms = h2_hamiltonian(bond, table)
        e_exact = float(np.linalg.eigvalsh(hamiltonian_matrix(terms)).min())
        energies: dict[str, float] = {}
        converged: dict[str, bool] = {}
        methods = {"unmitigated": (None, False), "zne": (None, True)}
        for kind, mitig in mitigators.items():
            methods[kind] = (mitig, False)
        # a budgeted run counts as converged when its optimum is physical;
        # the energy of any state is bounded by offset +- sum |c_i|
        span = sum(abs(t.coefficient) for t in terms if t.paulis != "II")
        offset = sum(t.coefficient for t in terms if t.paulis == "II")
        for method, (mitig, use_zne) in methods.items():
            fn = _energy_fn(
                terms, ex, mitig, layout,
                derive_seed(config.seed, "opt", repr(bond), method), use_zne, zne_cfg,
                exact=False,
            )
            _, x_best, _ = _optimize(
                fn, derive_seed(config.seed, "nm", repr(bond), method), restarts, maxfev
            )
            # report a fresh evaluation at the optimum (dodges the bias of
            # taking the minimum over noisy evaluations)
            fn_final = _energy_fn(
                terms, ex, mitig, layout,
                derive_seed(config.seed, "final", repr(bond), method), use_zne, zne_cfg,
                exact=False,
            )
            e = float(fn_final(x_best))
            energies[method] = e
            converged[method] = bool(
                np.isfinite(e) and offset - span - 0.1 <= e <= offset + span + 0.1
            )
        if check_noiseless:
            fn = _energy_fn(terms, ex, None, layout, 0, False, zne_cfg, exact=True)
            e_noiseless, _, _ = _optimize(
                fn, derive_seed(config.seed, "nm0", repr(bond)), max(3, restarts), 400,
                noisy=False,
            )
            energies["noiseless"] = e_noiseless
            noiseless_errs.append(abs(e_noiseless - e_exact))
        gap = abs(energies.get("zne", np.nan) - energies.get("rf", np.nan))
        out_rows.append(VqeRow(bond, e_exact, energies, gap, converged))

    result = VqeResult(out_rows, max(noiseless_errs) if noiseless_errs else None)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        methods = sorted(out_rows[0].energies)
        write_csv(
            os.path.join(out_dir, "dissociation.csv"),
            ["bond_length", "e_exact"]
            + [f"e_{m}" for m in methods]
            + ["zne_rf_gap", "converged"],
            [
                [r.bond_length, r.e_exact]
                + [r.energies[m] for m in methods]
                + [r.zne_rf_gap, all(r.converged.values())]
                for r in out_rows
            ],
        )
        write_manifest(
            out_dir, config, ex,
            {"noiseless_max_error": result.noiseless_max_error},
        )
    return result
