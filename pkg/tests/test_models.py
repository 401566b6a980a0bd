import json

import numpy as np
import pytest

from qemlab.features import DatasetRow, FeatureLayout, FeatureVector
from qemlab.models import (
    MlpModel,
    _init_mlp_weights,
    deserialize_model,
    fine_tune,
    fit_mlp,
    fit_ols,
    fit_rf,
    mlp_loss_and_grads,
    predict,
    predict_many,
    serialize_model,
)

LAYOUT = FeatureLayout(2)
D = LAYOUT.length


def make_rows(x, y, split="train"):
    return [
        DatasetRow(FeatureVector(np.asarray(xi, dtype=float), LAYOUT), float(yi),
                   f"c{i}", "ZZ", split)
        for i, (xi, yi) in enumerate(zip(x, y))
    ]


def linear_data(m, noise_sd=0.0, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(m, D))
    w = rng.normal(size=D) * 0.02
    y = x @ w + 0.1 + rng.normal(0, noise_sd, m)
    return x, np.clip(y, -1, 1)


class TestOls:
    def test_exact_interpolation_of_affine_targets(self):
        x, y = linear_data(60)
        model = fit_ols(make_rows(x, y))
        for xi, yi in zip(x, y):
            assert predict(model, xi) == pytest.approx(yi, abs=1e-9)

    def test_single_row(self):
        x, y = linear_data(1)
        model = fit_ols(make_rows(x, y))
        assert predict(model, x[0]) == pytest.approx(float(y[0]), abs=1e-9)

    def test_exact_interpolation_at_full_rank(self):
        # rows = features + 1 with random design: OLS interpolates exactly
        rng = np.random.default_rng(3)
        x = rng.normal(size=(D + 1, D))
        y = np.clip(rng.normal(size=D + 1) * 0.3, -1, 1)
        model = fit_ols(make_rows(x, y))
        for xi, yi in zip(x, y):
            assert predict(model, xi) == pytest.approx(yi, abs=1e-7)

    def test_rank_deficiency_min_norm(self):
        rng = np.random.default_rng(4)
        x = np.tile(rng.normal(size=(1, D)), (20, 1))  # rank-1 design
        y = np.full(20, 0.4)
        model = fit_ols(make_rows(x, y))
        assert np.all(np.isfinite(model.weights))
        assert predict(model, x[0]) == pytest.approx(0.4, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            fit_ols([])

    def test_zero_weights_predict_zero(self):
        from qemlab.models import OlsModel

        model = OlsModel(np.zeros(D + 1), LAYOUT.fingerprint)
        assert predict(model, np.ones(D)) == 0.0


class TestRandomForest:
    def test_single_row_constant_prediction(self):
        rows = make_rows(np.random.default_rng(0).normal(size=(1, D)), [0.7])
        model = fit_rf(rows, n_trees=10, seed=1)
        rng = np.random.default_rng(2)
        for _ in range(5):
            assert predict(model, rng.normal(size=D)) == 0.7

    def test_predictions_bounded_by_training_targets(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(80, D))
        y = np.clip(rng.uniform(-0.6, 0.4, 80), -1, 1)
        model = fit_rf(make_rows(x, y), n_trees=30, seed=2)
        for _ in range(50):
            p = predict(model, rng.normal(size=D))
            assert y.min() - 1e-12 <= p <= y.max() + 1e-12

    def test_deterministic_given_seed(self):
        x, y = linear_data(50, noise_sd=0.05, seed=6)
        rows = make_rows(x, y)
        a, b = fit_rf(rows, n_trees=15, seed=9), fit_rf(rows, n_trees=15, seed=9)
        assert a.trees == b.trees

    def test_row_permutation_leaves_structure_unchanged(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(60, D))
        y = np.clip(x[:, 0] * 0.3 + rng.normal(0, 0.05, 60), -1, 1)
        perm = rng.permutation(60)
        a = fit_rf(make_rows(x, y), n_trees=8, seed=4, bootstrap=False)
        b = fit_rf(make_rows(x[perm], y[perm]), n_trees=8, seed=4, bootstrap=False)
        assert a.trees == b.trees

    def test_default_hyperparameters(self):
        x, y = linear_data(10)
        model = fit_rf(make_rows(x, y))
        assert model.training["n_trees"] == 100
        assert model.training["min_split"] == 2
        assert model.training["max_features"] == 1

    def test_max_features_all_learns_linear_signal(self):
        x, y = linear_data(400, noise_sd=0.02, seed=8)
        model = fit_rf(make_rows(x[:300], y[:300]), n_trees=50, max_features="all", seed=3)
        rmse = np.sqrt(np.mean((predict_many(model, x[300:]) - y[300:]) ** 2))
        assert rmse < 0.7 * np.std(y[300:])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            fit_rf([])


class TestMlp:
    def test_gradient_check_against_finite_differences(self):
        rng = np.random.default_rng(0)
        weights = _init_mlp_weights(D, (16, 16), rng)
        x = rng.normal(size=(24, D))
        y = rng.uniform(-1, 1, 24)
        _, grads = mlp_loss_and_grads(weights, x, y)
        eps = 1e-6
        worst = 0.0
        for i, w in enumerate(weights):
            flat = w.reshape(-1)
            for j in range(0, flat.size, max(1, flat.size // 8)):
                flat[j] += eps
                lp, _ = mlp_loss_and_grads(weights, x, y)
                flat[j] -= 2 * eps
                lm, _ = mlp_loss_and_grads(weights, x, y)
                flat[j] += eps
                numeric = (lp - lm) / (2 * eps)
                analytic = grads[i].reshape(-1)[j]
                denom = max(1e-8, abs(numeric) + abs(analytic))
                worst = max(worst, abs(numeric - analytic) / denom)
        assert worst < 1e-4

    def test_zero_epochs_keeps_finite_initial_weights(self):
        x, y = linear_data(40)
        model = fit_mlp(make_rows(x, y), epochs=0, seed=1)
        p = predict(model, x[0])
        assert np.isfinite(p)
        assert model.adam_step == 0

    def test_linear_data_within_2x_ols(self):
        # OLS is the optimal linear baseline; the MLP must land within 2x
        rng = np.random.default_rng(22)
        x = np.zeros((1300, D))
        x[:, :6] = rng.normal(size=(1300, 6))
        w = rng.normal(size=6) * 0.1
        y = np.clip(x[:, :6] @ w + 0.1 + rng.normal(0, 0.1, 1300), -1, 1)
        rows = make_rows(x[:1000], y[:1000])
        xt, yt = x[1000:], y[1000:]
        ols = fit_ols(rows)
        mlp = fit_mlp(rows, epochs=200, seed=2)
        mse_ols = np.mean((predict_many(ols, xt) - yt) ** 2)
        mse_mlp = np.mean((predict_many(mlp, xt) - yt) ** 2)
        assert mse_mlp <= 2 * mse_ols

    def test_one_hidden_layer_option(self):
        x, y = linear_data(50)
        model = fit_mlp(make_rows(x, y), epochs=5, hidden=(64,), seed=3)
        assert len(model.weights) == 4
        assert np.isfinite(predict(model, x[0]))

    def test_batch_size_default(self):
        x, y = linear_data(40)
        model = fit_mlp(make_rows(x, y), epochs=1, seed=4)
        assert model.training["batch"] == 32


class TestFineTune:
    def test_no_rows_is_identity(self):
        x, y = linear_data(64, noise_sd=0.02)
        model = fit_mlp(make_rows(x, y), epochs=20, seed=5)
        same = fine_tune(model, [], epochs=50)
        xs = np.random.default_rng(6).normal(size=D)
        assert predict(same, xs) == predict(model, xs)

    def test_zero_epochs_is_identity(self):
        x, y = linear_data(64, noise_sd=0.02)
        model = fit_mlp(make_rows(x, y), epochs=20, seed=5)
        same = fine_tune(model, make_rows(x, y), epochs=0)
        xs = np.random.default_rng(6).normal(size=D)
        assert predict(same, xs) == predict(model, xs)

    def test_loss_non_increasing_after_convergence_window(self):
        x, y = linear_data(200, noise_sd=0.02, seed=13)
        rows = make_rows(x, y)
        model = fit_mlp(rows, epochs=60, seed=7)
        z = np.stack([r.features.values for r in rows])
        targets = np.array([r.target for r in rows])
        before = np.mean((predict_many(model, z) - targets) ** 2)
        tuned = fine_tune(model, rows, epochs=60, seed=8)
        after = np.mean((predict_many(tuned, z) - targets) ** 2)
        assert after <= before + 1e-6

    def test_width_mismatch_rejected(self):
        x, y = linear_data(30)
        model = fit_mlp(make_rows(x, y), epochs=2, seed=9)
        other_layout = FeatureLayout(3)
        bad = [DatasetRow(FeatureVector(np.zeros(other_layout.length), other_layout),
                          0.0, "c", "ZII", "train")]
        with pytest.raises(ValueError):
            fine_tune(model, bad, epochs=5)

    def test_original_model_not_mutated(self):
        x, y = linear_data(64, noise_sd=0.02)
        model = fit_mlp(make_rows(x, y), epochs=10, seed=5)
        w0 = [w.copy() for w in model.weights]
        fine_tune(model, make_rows(x, y), epochs=10)
        assert all(np.array_equal(a, b) for a, b in zip(w0, model.weights))


class TestPredictContract:
    def test_clamping(self):
        from qemlab.models import OlsModel

        model = OlsModel(np.zeros(D + 1), LAYOUT.fingerprint)
        model.weights[-1] = 1.3
        assert predict(model, np.zeros(D)) == 1.0
        model.weights[-1] = -7.0
        assert predict(model, np.zeros(D)) == -1.0

    def test_width_mismatch(self):
        x, y = linear_data(10)
        model = fit_ols(make_rows(x, y))
        with pytest.raises(ValueError):
            predict(model, np.zeros(D + 3))


class TestSerialization:
    def _check_exact(self, model, x):
        payload = serialize_model(model)
        back = deserialize_model(payload)
        for xi in x:
            assert predict(back, xi) == predict(model, xi)
        assert back.layout_fingerprint == model.layout_fingerprint

    def test_round_trip_every_kind(self):
        x, y = linear_data(80, noise_sd=0.05, seed=14)
        rows = make_rows(x, y)
        probes = np.random.default_rng(15).normal(size=(20, D))
        self._check_exact(fit_ols(rows), probes)
        self._check_exact(fit_rf(rows, n_trees=12, seed=1), probes)
        self._check_exact(fit_mlp(rows, epochs=15, seed=2), probes)

    def test_kind_discriminator(self):
        x, y = linear_data(10)
        payload = json.loads(serialize_model(fit_ols(make_rows(x, y))))
        assert payload["kind"] == "ols"
        assert "training" in payload and "params" in payload

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            deserialize_model(json.dumps({"kind": "gnn", "params": {}}))
