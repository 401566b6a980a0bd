"""Command-line harness.

    qemlab bench <experiment> [--config file.json] --out DIR
    qemlab cost breakeven|pec|zne ...
    qemlab plot metrics.csv --kind line|box --out chart.svg
    qemlab train --dataset rows.csv --model rf --out model.json
    qemlab mitigate --model model.json --dataset rows.csv --out preds.csv

Exit codes: 0 success, 2 configuration/usage error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import EXPERIMENTS, ConfigError, ExperimentConfig

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qemlab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bench = sub.add_parser("bench", help="run a benchmark experiment")
    p_bench.add_argument("experiment", choices=EXPERIMENTS)
    p_bench.add_argument("--config", help="JSON config file (defaults used if omitted)")
    p_bench.add_argument("--out", required=True, help="output directory")
    p_bench.add_argument("--seed", type=int, default=1234, help="master seed when no config file")

    p_cost = sub.add_parser("cost", help="overhead and cost formulas")
    cost_sub = p_cost.add_subparsers(dest="cost_kind", required=True)
    p_be = cost_sub.add_parser("breakeven")
    p_be.add_argument("--m", type=int, required=True, help="noise factors of the mimicked method")
    p_be.add_argument("--n-train", type=int)
    p_be.add_argument("--n-test", type=int)
    p_be.add_argument("--train-mitigated", action="store_true")
    p_pec = cost_sub.add_parser("pec")
    p_pec.add_argument("--gamma-bar", type=float, required=True)
    p_pec.add_argument("--beta", type=float, required=True, help="seconds per circuit layer")
    p_pec.add_argument("--n", type=int, help="qubits")
    p_pec.add_argument("--l", type=int, help="two-qubit layers")
    p_pec.add_argument("--sweep", action="store_true", help="sweep a (n, l) grid to CSV on stdout")
    p_pec.add_argument("--max-n", type=int, default=100)
    p_pec.add_argument("--max-l", type=int, default=60)
    p_zne = cost_sub.add_parser("zne")
    p_zne.add_argument("--n-gates", type=int, required=True)
    p_zne.add_argument("--eps", type=float, required=True)
    p_zne.add_argument("--r", type=float, required=True)

    p_plot = sub.add_parser("plot", help="render a CSV as a standalone SVG")
    p_plot.add_argument("csv")
    p_plot.add_argument("--kind", choices=("line", "box"), default="line")
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("--title")

    p_train = sub.add_parser("train", help="fit a model from a dataset CSV")
    p_train.add_argument("--dataset", required=True)
    p_train.add_argument("--model", choices=("ols", "rf", "mlp"), required=True)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--seed", type=int, default=0)

    p_mit = sub.add_parser("mitigate", help="apply a model file to a dataset CSV")
    p_mit.add_argument("--model", required=True)
    p_mit.add_argument("--dataset", required=True)
    p_mit.add_argument("--out", required=True)
    return parser


def _cmd_bench(args) -> int:
    from .experiments import RUNNERS

    if args.config:
        config = ExperimentConfig.from_json_file(args.config)
        if config.experiment != args.experiment:
            raise ConfigError(
                f"config is for {config.experiment!r}, asked to run {args.experiment!r}"
            )
    else:
        config = ExperimentConfig(experiment=args.experiment, seed=args.seed)
    RUNNERS[args.experiment](config, out_dir=args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_cost(args) -> int:
    from ..mitigation import overhead_report, pec_runtime, zne_sampling_cost

    if args.cost_kind == "breakeven":
        if args.n_train and args.n_test:
            rep = overhead_report(args.n_train, args.n_test, args.m, args.train_mitigated)
            print(f"qem_executions,{rep.total_executions_qem}")
            print(f"ml_executions,{rep.total_executions_ml}")
            print(f"overall_reduction,{rep.overall_reduction!r}")
            print(f"runtime_reduction,{rep.runtime_reduction!r}")
            print(f"breakeven_ratio,{rep.breakeven_ratio!r}")
        else:
            rep = overhead_report(1, 1, args.m, False)
            print(f"breakeven_ratio,{rep.breakeven_ratio!r}")
    elif args.cost_kind == "pec":
        if args.sweep:
            print("n,l,seconds,log10_seconds,feasible")
            for nn in range(10, args.max_n + 1, 10):
                for ll in range(10, args.max_l + 1, 10):
                    rt = pec_runtime(nn, ll, args.gamma_bar, args.beta)
                    print(f"{nn},{ll},{rt.seconds!r},{rt.log10_seconds!r},{rt.feasible}")
        else:
            if args.n is None or args.l is None:
                raise ConfigError("pec needs --n and --l (or --sweep)")
            rt = pec_runtime(args.n, args.l, args.gamma_bar, args.beta)
            print(f"seconds,{rt.seconds!r}")
            print(f"log10_seconds,{rt.log10_seconds!r}")
            print(f"feasible,{rt.feasible}")
    else:
        print(f"cost,{zne_sampling_cost(args.n_gates, args.eps, args.r)!r}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .svgplot import plot_csv

    try:
        plot_csv(args.csv, args.kind, args.out, title=args.title)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    from ..features import csv_to_dataset
    from ..models import fit_mlp, fit_ols, fit_rf, serialize_model

    try:
        rows = csv_to_dataset(args.dataset)
    except (ValueError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    if not rows:
        raise ConfigError(f"{args.dataset}: no rows to train on")
    if args.model == "ols":
        model = fit_ols(rows)
    elif args.model == "rf":
        model = fit_rf(rows, seed=args.seed)
    else:
        model = fit_mlp(rows, seed=args.seed)
    with open(args.out, "w") as fh:
        fh.write(serialize_model(model))
        fh.write("\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_mitigate(args) -> int:
    from ..features import csv_to_dataset
    from ..models import deserialize_model, predict

    try:
        with open(args.model) as fh:
            model = deserialize_model(fh.read())
        rows = csv_to_dataset(args.dataset)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        raise ConfigError(str(exc)) from None
    if rows and rows[0].features.layout.fingerprint != model.layout_fingerprint:
        raise ConfigError(
            f"dataset layout {rows[0].features.layout.fingerprint} does not match "
            f"model layout {model.layout_fingerprint}"
        )
    with open(args.out, "w") as fh:
        fh.write("circuit_id,observable,noisy,mitigated,target\n")
        for row in rows:
            pred = predict(model, row.features)
            fh.write(
                f"{row.circuit_id},{row.observable},{row.noisy!r},{pred!r},{row.target!r}\n"
            )
    print(f"wrote {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "bench": _cmd_bench,
        "cost": _cmd_cost,
        "plot": _cmd_plot,
        "train": _cmd_train,
        "mitigate": _cmd_mitigate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
