"""Regression models with a uniform fit/predict/serialize contract.

Three model families, all trained from scratch on the shared feature
vectors: ordinary least squares, a CART-based random forest (bootstrap
aggregated, MSE-reduction splits), and a two-hidden-layer MLP trained
with mini-batch Adam.  Predictions are clamped to [-1, 1] since Pauli
expectations are physically bounded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .features import DatasetRow, design_matrix


def _clamp(v: float) -> float:
    return float(min(1.0, max(-1.0, v)))


# -- ordinary least squares -------------------------------------------------------


@dataclass
class OlsModel:
    weights: np.ndarray  # one per feature, intercept last
    layout_fingerprint: str = ""
    training: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.weights) - 1

    def predict_raw(self, x: np.ndarray) -> float:
        return float(np.dot(self.weights[:-1], x) + self.weights[-1])


def fit_ols(rows: list[DatasetRow]) -> OlsModel:
    """Least squares via SVD (minimum-norm solution on rank deficiency)."""
    x, y = design_matrix(rows)
    aug = np.hstack([x, np.ones((len(x), 1))])
    weights, *_ = np.linalg.lstsq(aug, y, rcond=None)
    if not np.all(np.isfinite(weights)):
        raise RuntimeError("non-finite OLS solution")
    return OlsModel(
        weights,
        layout_fingerprint=rows[0].features.layout.fingerprint,
        training={"n_rows": len(rows)},
    )


# -- random forest ----------------------------------------------------------------
# A tree node is either a leaf (float) or [feature, threshold, left, right];
# samples with x[feature] <= threshold go left.


def _best_split_on_feature(col: np.ndarray, y: np.ndarray):
    """Best MSE-reduction split on one feature, or None if no valid split.

    Works on value-sorted groups, so the result does not depend on row
    order.  Thresholds are midpoints between consecutive distinct values.
    """
    order = np.argsort(col, kind="stable")
    vs = col[order]
    ys = y[order]
    boundary = np.nonzero(vs[1:] != vs[:-1])[0]
    if boundary.size == 0:
        return None
    csum = np.cumsum(ys)
    m = len(ys)
    total = csum[-1]
    nl = boundary + 1.0
    nr = m - nl
    sl = csum[boundary]
    sr = total - sl
    gain = sl * sl / nl + sr * sr / nr - total * total / m
    best = int(np.argmax(gain))
    i = boundary[best]
    thresh = 0.5 * (vs[i] + vs[i + 1])
    if thresh >= vs[i + 1]:  # midpoint rounded up between two adjacent floats
        thresh = vs[i]
    return float(gain[best]), float(thresh)


def _grow_tree(x, y, rng, min_split: int, max_features: int):
    """Grow one CART regression tree (iterative, so depth is unbounded)."""
    n_features = x.shape[1]
    root: list = [None]

    stack = [(np.arange(len(y)), root, 0)]
    while stack:
        idx, parent, slot = stack.pop()
        ys = y[idx]
        if len(idx) < min_split or np.all(ys == ys[0]):
            parent[slot] = float(np.mean(ys))
            continue
        order = rng.permutation(n_features)
        best = None
        n_valid = 0
        # keep drawing features past max_features until a valid split exists
        for f in order:
            res = _best_split_on_feature(x[idx, f], ys)
            if res is None:
                continue
            gain, thresh = res
            if best is None or gain > best[0]:
                best = (gain, int(f), thresh)
            n_valid += 1
            if n_valid >= max_features:
                break
        if best is None:
            parent[slot] = float(np.mean(ys))
            continue
        _, f, thresh = best
        mask = x[idx, f] <= thresh
        node = [f, thresh, None, None]
        parent[slot] = node
        # push right first so the left child is grown first (stable rng order)
        stack.append((idx[~mask], node, 3))
        stack.append((idx[mask], node, 2))
    return root[0]


def _tree_predict(node, x: np.ndarray) -> float:
    while isinstance(node, list):
        node = node[2] if x[node[0]] <= node[1] else node[3]
    return node


@dataclass
class RandomForestModel:
    trees: list
    n_features: int
    seed: int = 0
    layout_fingerprint: str = ""
    training: dict = field(default_factory=dict)

    def predict_raw(self, x: np.ndarray) -> float:
        return float(np.mean([_tree_predict(t, x) for t in self.trees]))


def fit_rf(
    rows: list[DatasetRow],
    n_trees: int = 100,
    min_split: int = 2,
    max_features: int | str = 1,
    seed: int = 0,
    bootstrap: bool = True,
) -> RandomForestModel:
    """Bootstrap-aggregated CART forest.

    Defaults follow the reference configuration: 100 trees, nodes split
    while they hold at least 2 samples, and a single randomly drawn
    feature considered per split (extremely randomized).  ``max_features``
    also accepts "sqrt" or "all"; the benchmarks use "all", which matches
    the behaviour of the usual library default.
    """
    x, y = design_matrix(rows)
    if max_features == "all":
        max_features = x.shape[1]
    elif max_features == "sqrt":
        max_features = max(1, int(math.sqrt(x.shape[1])))
    elif not isinstance(max_features, int) or max_features < 1:
        raise ValueError(f"bad max_features {max_features!r}")
    trees = []
    for child_seed in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child_seed)
        if bootstrap:
            idx = rng.integers(0, len(y), len(y))
            xb, yb = x[idx], y[idx]
        else:
            xb, yb = x, y
        trees.append(_grow_tree(xb, yb, rng, min_split, max_features))
    return RandomForestModel(
        trees,
        n_features=x.shape[1],
        seed=seed,
        layout_fingerprint=rows[0].features.layout.fingerprint,
        training={
            "n_rows": len(rows),
            "n_trees": n_trees,
            "min_split": min_split,
            "max_features": max_features,
            "bootstrap": bootstrap,
        },
    )


# -- multi-layer perceptron --------------------------------------------------------


@dataclass
class MlpModel:
    """input -> 64 -> 64 -> 1 ReLU network with feature standardization."""

    weights: list[np.ndarray]  # [w1, b1, w2, b2, w3, b3]
    mu: np.ndarray
    sigma: np.ndarray
    adam_m: list[np.ndarray] = field(default_factory=list)
    adam_v: list[np.ndarray] = field(default_factory=list)
    adam_step: int = 0
    layout_fingerprint: str = ""
    training: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.mu) / self.sigma
        return _mlp_forward(self.weights, z)[:, 0]

    def predict_raw(self, x: np.ndarray) -> float:
        return float(self.forward(x[None, :])[0])


def _mlp_forward(weights: list[np.ndarray], x: np.ndarray) -> np.ndarray:
    a = x
    n_layers = len(weights) // 2
    for i in range(n_layers):
        a = a @ weights[2 * i] + weights[2 * i + 1]
        if i < n_layers - 1:
            a = np.maximum(a, 0.0)
    return a


def mlp_loss_and_grads(weights: list[np.ndarray], x: np.ndarray, y: np.ndarray):
    """MSE loss and gradients for a standardized batch (backprop)."""
    m = len(x)
    n_layers = len(weights) // 2
    acts = [x]
    pre = []
    a = x
    for i in range(n_layers):
        z = a @ weights[2 * i] + weights[2 * i + 1]
        pre.append(z)
        a = np.maximum(z, 0.0) if i < n_layers - 1 else z
        acts.append(a)
    out = acts[-1][:, 0]
    err = out - y
    loss = float(np.mean(err**2))
    grads: list[np.ndarray] = [np.empty(0)] * len(weights)
    delta = (2.0 / m) * err[:, None]
    for i in range(n_layers - 1, -1, -1):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[2 * i].T) * (pre[i - 1] > 0)
    return loss, grads


def _init_mlp_weights(n_features: int, hidden: tuple[int, ...], rng) -> list[np.ndarray]:
    sizes = [n_features, *hidden, 1]
    weights = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
        weights.append(np.zeros(fan_out))
    return weights


def _adam_loop(
    model: MlpModel,
    x: np.ndarray,
    y: np.ndarray,
    epochs: int,
    batch: int,
    lr: float,
    rng,
    val_fraction: float,
    patience: int,
) -> None:
    """Train ``model.weights`` in place; fresh Adam state, early stopping on
    a held-out validation split when the dataset is large enough."""
    z = (x - model.mu) / model.sigma
    n = len(z)
    n_val = int(round(val_fraction * n)) if n >= 20 else 0
    perm = rng.permutation(n)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    zt, yt = z[train_idx], y[train_idx]
    weights = model.weights
    m_state = [np.zeros_like(w) for w in weights]
    v_state = [np.zeros_like(w) for w in weights]
    b1, b2, eps = 0.9, 0.999, 1e-8
    step = 0
    batch = max(1, min(batch, len(zt)))
    best_val = np.inf
    best_weights = None
    stale = 0
    warmup = min(epochs // 2, 5 * patience)  # the tiny val split is noisy early on
    for epoch in range(epochs):
        order = rng.permutation(len(zt))
        for start in range(0, len(zt), batch):
            sel = order[start : start + batch]
            loss, grads = mlp_loss_and_grads(weights, zt[sel], yt[sel])
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite training loss at step {step} "
                    f"(lr={lr}, batch={batch}); aborting"
                )
            step += 1
            for i, g in enumerate(grads):
                m_state[i] = b1 * m_state[i] + (1 - b1) * g
                v_state[i] = b2 * v_state[i] + (1 - b2) * g * g
                mhat = m_state[i] / (1 - b1**step)
                vhat = v_state[i] / (1 - b2**step)
                weights[i] = weights[i] - lr * mhat / (np.sqrt(vhat) + eps)
        if n_val:
            val_loss, _ = mlp_loss_and_grads(weights, z[val_idx], y[val_idx])
            if val_loss < best_val - 1e-12:
                best_val = val_loss
                best_weights = [w.copy() for w in weights]
                stale = 0
            elif epoch >= warmup:
                stale += 1
                if stale >= patience:
                    break
    if best_weights is not None:
        model.weights = best_weights
    model.adam_m = m_state
    model.adam_v = v_state
    model.adam_step = step


def fit_mlp(
    rows: list[DatasetRow],
    epochs: int = 200,
    batch: int = 32,
    lr: float = 1e-3,
    seed: int = 0,
    hidden: tuple[int, ...] = (64, 64),
    val_fraction: float = 0.1,
    patience: int = 40,
) -> MlpModel:
    x, y = design_matrix(rows)
    rng = np.random.default_rng(seed)
    mu = x.mean(axis=0)
    sigma = x.std(axis=0)
    sigma[sigma < 1e-12] = 1.0
    model = MlpModel(
        weights=_init_mlp_weights(x.shape[1], hidden, rng),
        mu=mu,
        sigma=sigma,
        layout_fingerprint=rows[0].features.layout.fingerprint,
        training={
            "n_rows": len(rows),
            "epochs": epochs,
            "batch": batch,
            "lr": lr,
            "hidden": list(hidden),
            "seed": seed,
        },
    )
    if epochs > 0:
        _adam_loop(model, x, y, epochs, batch, lr, rng, val_fraction, patience)
    return model


def fine_tune(
    model: MlpModel,
    rows: list[DatasetRow],
    epochs: int = 100,
    batch: int = 32,
    lr: float = 1e-3,
    seed: int = 0,
) -> MlpModel:
    """Continue training from the current parameters with fresh Adam state.

    Keeps the original feature standardization.  Returns a new model; with
    no rows (or zero epochs) the parameters are unchanged.
    """
    new = MlpModel(
        weights=[w.copy() for w in model.weights],
        mu=model.mu.copy(),
        sigma=model.sigma.copy(),
        layout_fingerprint=model.layout_fingerprint,
        training={**model.training, "fine_tuned_rows": len(rows), "fine_tune_epochs": epochs},
    )
    if not rows or epochs == 0:
        return new
    x, y = design_matrix(rows)
    if x.shape[1] != model.n_features:
        raise ValueError(
            f"fine-tune feature width {x.shape[1]} != model width {model.n_features}"
        )
    rng = np.random.default_rng(seed)
    _adam_loop(new, x, y, epochs, batch, lr, rng, val_fraction=0.1, patience=40)
    return new


# -- shared prediction / serialization ----------------------------------------------

MitigationModel = OlsModel | RandomForestModel | MlpModel

MODEL_KINDS = {"ols": OlsModel, "rf": RandomForestModel, "mlp": MlpModel}


def model_kind(model: MitigationModel) -> str:
    for kind, cls in MODEL_KINDS.items():
        if isinstance(model, cls):
            return kind
    raise TypeError(f"unknown model type {type(model)}")


def predict(model: MitigationModel, features) -> float:
    """Model forward pass, clamped to the physical range [-1, 1]."""
    x = np.asarray(getattr(features, "values", features), dtype=float)
    if x.shape != (model.n_features,):
        raise ValueError(f"feature width {x.shape} != model width {model.n_features}")
    return _clamp(model.predict_raw(x))


def predict_many(model: MitigationModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[1] != model.n_features:
        raise ValueError(f"feature width {x.shape[1]} != model width {model.n_features}")
    if isinstance(model, MlpModel):
        out = model.forward(x)
    elif isinstance(model, OlsModel):
        out = x @ model.weights[:-1] + model.weights[-1]
    else:
        out = np.array([model.predict_raw(row) for row in x])
    return np.clip(out, -1.0, 1.0)


def serialize_model(model: MitigationModel) -> str:
    kind = model_kind(model)
    if isinstance(model, OlsModel):
        params = {"weights": model.weights.tolist()}
    elif isinstance(model, RandomForestModel):
        params = {"trees": model.trees, "n_features": model.n_features, "seed": model.seed}
    else:
        params = {
            "weights": [w.tolist() for w in model.weights],
            "mu": model.mu.tolist(),
            "sigma": model.sigma.tolist(),
            "adam_m": [w.tolist() for w in model.adam_m],
            "adam_v": [w.tolist() for w in model.adam_v],
            "adam_step": model.adam_step,
        }
    return json.dumps(
        {
            "kind": kind,
            "layout_fingerprint": model.layout_fingerprint,
            "training": model.training,
            "params": params,
        }
    )


def deserialize_model(payload: str) -> MitigationModel:
    d = json.loads(payload)
    kind = d.get("kind")
    p = d["params"]
    if kind == "ols":
        return OlsModel(np.array(p["weights"]), d["layout_fingerprint"], d["training"])
    if kind == "rf":
        return RandomForestModel(
            p["trees"], p["n_features"], p["seed"], d["layout_fingerprint"], d["training"]
        )
    if kind == "mlp":
        return MlpModel(
            [np.array(w) for w in p["weights"]],
            np.array(p["mu"]),
            np.array(p["sigma"]),
            [np.array(w) for w in p["adam_m"]],
            [np.array(w) for w in p["adam_v"]],
            p["adam_step"],
            d["layout_fingerprint"],
            d["training"],
        )
    raise ValueError(f"unknown model kind {kind!r}")
