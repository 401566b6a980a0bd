"""Error metrics and bootstrap aggregation for the benchmark harness."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..seeding import derive_seed

N_BOOTSTRAP = 1000


def l2_error(values: dict[str, float], ideal: dict[str, float]) -> float:
    """L2 distance between a method's expectation vector and the ideal one."""
    keys = sorted(ideal)
    diff = np.array([values[k] - ideal[k] for k in keys])
    return float(np.linalg.norm(diff))


@dataclass(frozen=True)
class MetricRow:
    method: str
    bucket: str
    mean_error: float
    ci_lo: float
    ci_hi: float
    n: int


def bootstrap_mean_ci(
    values, seed: int, n_boot: int = N_BOOTSTRAP, level: float = 0.95
) -> tuple[float, float, float]:
    """Sample mean with a percentile bootstrap confidence interval."""
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if len(arr) < 2:
        return mean, mean, mean
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(arr), size=(n_boot, len(arr)))
    means = arr[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return mean, float(lo), float(hi)


def bootstrap_p_less(a, b, seed: int, n_boot: int = N_BOOTSTRAP) -> float:
    """One-tailed paired bootstrap p-value for mean(a) < mean(b).

    Resamples the paired differences; p = fraction of resampled mean
    differences >= 0 (never reported below 1/n_boot).
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(d), size=(n_boot, len(d)))
    means = d[idx].mean(axis=1)
    p = float(np.mean(means >= 0.0))
    return max(p, 1.0 / n_boot)


def metric_rows(
    errors_by_group: dict[tuple, list[float]], seed: int
) -> list[MetricRow]:
    """Aggregate {(method, bucket): errors} into MetricRows (stable order)."""
    rows = []
    for (method, bucket) in sorted(errors_by_group, key=lambda k: (str(k[1]), k[0])):
        vals = errors_by_group[(method, bucket)]
        mean, lo, hi = bootstrap_mean_ci(
            vals, derive_seed(seed, "bootstrap", method, str(bucket))
        )
        rows.append(MetricRow(method, str(bucket), mean, lo, hi, len(vals)))
    return rows


def fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def write_csv(path, header: list[str], records: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for rec in records:
            w.writerow([fmt(v) for v in rec])


METRIC_HEADER = ["method", "bucket", "mean_error", "ci_lo", "ci_hi", "n"]


def write_metric_rows(path, rows: list[MetricRow]) -> None:
    write_csv(
        path,
        METRIC_HEADER,
        [[r.method, r.bucket, r.mean_error, r.ci_lo, r.ci_hi, r.n] for r in rows],
    )
