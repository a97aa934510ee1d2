import json
import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alime import neural
from alime.errors import ConfigurationError, NumericOverflowError, ShapeError, TrainingDivergedError
from alime.neural import Layer, MlpModel, TrainConfig, forward, init_model, loss_and_grad, train
from oracles import max_relative_error, numeric_grad, random_case


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(20):
        model, X, T, loss = random_case(rng)
        _, analytic = loss_and_grad(model, X, T, loss)
        assert max_relative_error(analytic, numeric_grad(model, X, T, loss)) < 1e-4


class TestInit:
    def test_blackbox_shape(self):
        model = init_model([9, 30, 2], ["relu", "softmax"], seed=0)
        assert model.dims == [9, 30, 2]
        assert model.layers[0].weight.shape == (30, 9)
        assert (model.layers[0].bias == 0).all()
        limit = math.sqrt(6 / 39)
        assert np.abs(model.layers[0].weight).max() <= limit

    def test_autoencoder_shape(self):
        model = init_model([4, 2, 4], ["relu", "identity"], seed=0)
        assert model.dims == [4, 2, 4]

    def test_seeded(self):
        a = init_model([5, 3, 2], ["relu", "softmax"], seed=3)
        b = init_model([5, 3, 2], ["relu", "softmax"], seed=3)
        assert all(x.weight.tobytes() == y.weight.tobytes() for x, y in zip(a.layers, b.layers))

    @pytest.mark.parametrize(
        "dims,acts",
        [([4, 0, 2], ["relu", "identity"]), ([4], []), ([4, 2], ["relu", "identity"]), ([3, 3, 3], ["softmax", "identity"])],
    )
    def test_invalid(self, dims, acts):
        with pytest.raises(ConfigurationError):
            init_model(dims, acts, seed=0)


class TestForward:
    def test_zero_model(self):
        model = MlpModel((Layer(np.zeros((3, 4)), np.zeros(3), "identity"),), 4)
        assert (forward(model, np.ones(4)) == 0).all()

    def test_affine(self, rng):
        W, b, x = rng.normal(size=(3, 4)), rng.normal(size=3), rng.normal(size=4)
        model = MlpModel((Layer(W, b, "identity"),), 4)
        np.testing.assert_allclose(forward(model, x), W @ x + b, rtol=1e-14)

    def test_softmax_symmetry(self):
        model = MlpModel((Layer(np.zeros((2, 3)), np.zeros(2), "softmax"),), 3)
        assert forward(model, np.ones(3)).tolist() == [0.5, 0.5]

    def test_shape_error(self):
        model = init_model([3, 2], ["identity"], seed=0)
        with pytest.raises(ShapeError):
            forward(model, np.ones(4))

    def test_batch_rows_bitwise_equal_single_rows(self, rng):
        model = init_model([9, 30, 8], ["relu", "identity"], seed=1)
        X = rng.normal(size=(200, 9))
        batch = forward(model, X)
        assert all(forward(model, X[i]).tobytes() == batch[i].tobytes() for i in range(200))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=3, max_size=3), st.integers(0, 1000))
    def test_output_ranges(self, x, seed):
        soft = init_model([3, 5, 4], ["relu", "softmax"], seed=seed)
        sig = init_model([3, 5, 4], ["relu", "sigmoid"], seed=seed)
        assert abs(forward(soft, np.array(x)).sum() - 1.0) <= 1e-9
        s = forward(sig, np.array(x) / 10)
        assert ((s > 0) & (s < 1)).all()


class TestLoss:
    def test_mse_minimum(self, rng):
        model = init_model([3, 4, 2], ["relu", "identity"], seed=0)
        X = rng.normal(size=(5, 3))
        value, grads = loss_and_grad(model, X, forward(model, X), "mse")
        assert value == 0.0
        assert all(not dW.any() and not db.any() for dW, db in grads)

    def test_bce_uniform_prediction(self):
        model = MlpModel((Layer(np.zeros((2, 3)), np.zeros(2), "softmax"),), 3)
        value, _ = loss_and_grad(model, np.ones((1, 3)), np.array([[0.0, 1.0]]), "bce")
        assert value == pytest.approx(math.log(2), abs=1e-15)

    def test_bce_needs_probability_head(self):
        model = init_model([3, 2], ["identity"], seed=0)
        with pytest.raises(ConfigurationError):
            loss_and_grad(model, np.ones((1, 3)), np.array([[0.0, 1.0]]), "bce")

    def test_overflow(self):
        model = MlpModel((Layer(np.full((2, 2), 1e308), np.zeros(2), "identity"),), 2)
        with pytest.raises(NumericOverflowError):
            loss_and_grad(model, np.full((1, 2), 1e10), np.zeros((1, 2)), "mse")


class TestTrain:
    def _linear_problem(self, rng):
        X = rng.normal(size=(200, 3))
        W = np.array([[1.0, -2.0, 0.5], [0.3, 0.0, 1.5]])
        return X, X @ W.T + np.array([0.1, -0.2])

    def test_zero_learning_rate(self, rng):
        X, Y = self._linear_problem(rng)
        model = init_model([3, 2], ["identity"], seed=0)
        out = train(model, X, Y, TrainConfig(epochs=5, learning_rate=0.0, loss="mse"))
        assert all(a.weight.tobytes() == b.weight.tobytes() for a, b in zip(model.layers, out.layers))
        assert len(out.loss_history) == 6

    def test_linear_fit_loss_decreases(self, rng):
        X, Y = self._linear_problem(rng)
        model = init_model([3, 2], ["identity"], seed=0)
        out = train(model, X, Y, TrainConfig(epochs=50, learning_rate=0.05, loss="mse"))
        h = np.array(out.loss_history)
        assert np.mean(h[1:] <= h[:-1]) >= 0.95
        assert h[-1] < 1e-6

    def test_deterministic(self, rng):
        X, Y = self._linear_problem(rng)
        cfg = TrainConfig(epochs=5, learning_rate=0.05, loss="mse", seed=4)
        a = train(init_model([3, 4, 2], ["relu", "identity"], 1), X, Y, cfg)
        b = train(init_model([3, 4, 2], ["relu", "identity"], 1), X, Y, cfg)
        assert neural.dumps(a) == neural.dumps(b)

    def test_divergence_names_epoch(self, rng):
        X, Y = self._linear_problem(rng)
        with pytest.raises(TrainingDivergedError) as info:
            train(init_model([3, 2], ["identity"], 0), X * 1e3, Y * 1e3, TrainConfig(epochs=20, learning_rate=10.0, loss="mse"))
        assert info.value.epoch >= 1

    def test_batch_larger_than_data(self, rng):
        X, Y = self._linear_problem(rng)
        with pytest.raises(ConfigurationError):
            train(init_model([3, 2], ["identity"], 0), X[:10], Y[:10], TrainConfig(batch_size=32, loss="mse"))


class TestSerialization:
    def test_round_trip(self):
        model = init_model([4, 6, 2], ["relu", "softmax"], seed=2)
        back = neural.loads(neural.dumps(model))
        assert neural.dumps(back) == neural.dumps(model)
        assert all(a.weight.tobytes() == b.weight.tobytes() for a, b in zip(model.layers, back.layers))

    def test_schema_document(self):
        jsonschema = pytest.importorskip("jsonschema")
        schema = json.loads((resources.files("alime") / "schemas" / "mlp.schema.json").read_text())
        doc = neural.model_to_dict(init_model([4, 6, 2], ["relu", "softmax"], seed=2))
        jsonschema.validate(doc, schema)

    def test_rejects_other_format(self):
        with pytest.raises(ConfigurationError):
            neural.model_from_dict({"format": "other", "version": 1})

    def test_softmax_only_last(self):
        with pytest.raises(ConfigurationError):
            MlpModel((Layer(np.eye(2), np.zeros(2), "softmax"), Layer(np.eye(2), np.zeros(2), "identity")), 2)
