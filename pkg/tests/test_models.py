import json

import numpy as np
import pytest

from alime import models, neural
from alime.errors import ConfigurationError, ShapeError
from alime.models import (
    BlackBoxPredictor,
    corrupt,
    embed,
    predict_proba,
    reconstruction_mse,
    train_autoencoder,
)
from alime.neural import Layer, MlpModel, TrainConfig


def _fixed_blackbox(W, b):
    return BlackBoxPredictor(MlpModel((Layer(np.asarray(W, float), np.asarray(b, float), "softmax"),), len(W[0])))


class TestBlackBox:
    def test_shape_and_accuracy(self, blackbox, breast_cancer):
        assert blackbox.model.dims == [9, 30, 2]
        assert blackbox.model.activations == ["relu", "softmax"]
        test_acc = models.accuracy(blackbox, breast_cancer.X_test, breast_cancer.y_test)
        train_acc = models.accuracy(blackbox, breast_cancer.X_train, breast_cancer.y_train)
        assert abs(test_acc - 0.95) <= 0.05
        assert train_acc >= test_acc - 0.02

    def test_equal_logits(self):
        p = _fixed_blackbox([[0.0, 0.0], [0.0, 0.0]], [0.0, 0.0])
        assert predict_proba(p, np.array([1.0, -2.0])) == 0.5

    def test_positive_index(self):
        W, b = [[0.0], [0.0]], [0.0, 1.0]
        p1 = BlackBoxPredictor(_fixed_blackbox(W, b).model, 1)
        p0 = BlackBoxPredictor(_fixed_blackbox(W, b).model, 0)
        out = neural.forward(p1.model, np.zeros(1))
        assert predict_proba(p1, np.zeros(1)) == out[1]
        assert predict_proba(p0, np.zeros(1)) == out[0]

    def test_batch_equals_single(self, blackbox, breast_cancer):
        X = breast_cancer.X_test[:25]
        batch = predict_proba(blackbox, X)
        assert batch.tolist() == [predict_proba(blackbox, x) for x in X]

    def test_complement(self, blackbox, rng):
        X = rng.normal(scale=3, size=(500, 9))
        out = neural.forward(blackbox.model, X)
        np.testing.assert_allclose(predict_proba(blackbox, X) + out[:, 0], 1.0, atol=1e-9)
        assert ((predict_proba(blackbox, X) >= 0) & (predict_proba(blackbox, X) <= 1)).all()

    def test_shape_mismatch(self, blackbox):
        with pytest.raises(ShapeError):
            predict_proba(blackbox, np.zeros(4))

    def test_record_round_trip(self, blackbox):
        doc = models.blackbox_to_dict(blackbox, dataset="breast_cancer", seed=0)
        back = models.blackbox_from_dict(json.loads(json.dumps(doc)))
        assert neural.dumps(back.model) == neural.dumps(blackbox.model)


class TestCorrupt:
    def test_vanishing_noise(self, rng):
        x = rng.normal(size=9)
        np.testing.assert_allclose(corrupt(x, 1e-12, np.random.default_rng(0)), x, atol=1e-9)

    def test_seeded(self, rng):
        x = rng.normal(size=9)
        a = corrupt(x, 0.1, np.random.default_rng(5))
        b = corrupt(x, 0.1, np.random.default_rng(5))
        assert a.tobytes() == b.tobytes()

    def test_noise_scale(self):
        sigma = 0.1
        noise = corrupt(np.zeros((100_000, 3)), sigma, np.random.default_rng(1))
        assert np.all(np.abs(noise.std(axis=0) / sigma - 1) < 0.03)

    def test_sigma_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            corrupt(np.zeros(3), 0.0, np.random.default_rng(0))


class TestAutoencoder:
    def test_architecture(self, autoencoder):
        assert autoencoder.latent_dim == 8
        assert autoencoder.encoder.dims == [9, 9, 8]
        assert autoencoder.decoder.dims == [8, 9, 9]
        assert autoencoder.encoder.activations == ["relu", "identity"]
        assert autoencoder.decoder.activations == ["relu", "identity"]

    def test_beats_zero_baseline(self, autoencoder, breast_cancer):
        baseline = float(np.mean(breast_cancer.X_test**2))
        assert baseline > 0.9
        assert reconstruction_mse(autoencoder, breast_cancer.X_test) < 0.9

    def test_training_loss_drops(self, autoencoder):
        assert autoencoder.loss_history[-1] < autoencoder.loss_history[0]

    def test_full_width_latent_reconstructs_best(self, breast_cancer):
        cfg = TrainConfig(epochs=60, loss="mse", seed=2)
        mse = {L: reconstruction_mse(train_autoencoder(breast_cancer, L, 0.1, cfg), breast_cancer.X_test) for L in (2, 5, 9)}
        assert mse[9] < mse[5] and mse[9] < mse[2]

    def test_deterministic(self, breast_cancer):
        cfg = TrainConfig(epochs=5, loss="mse", seed=3)
        a = train_autoencoder(breast_cancer, 4, 0.1, cfg)
        b = train_autoencoder(breast_cancer, 4, 0.1, cfg)
        assert a.fingerprint == b.fingerprint
        assert neural.dumps(a.decoder) == neural.dumps(b.decoder)

    def test_embed(self, autoencoder, breast_cancer):
        x = breast_cancer.X_test[0]
        assert embed(autoencoder, x).shape == (8,)
        assert embed(autoencoder, x).tobytes() == embed(autoencoder, x).tobytes()
        E = embed(autoencoder, breast_cancer.X_train[:50])
        # no collapse: distinct rows map to distinct codes
        distinct_rows = np.unique(breast_cancer.X_train[:50], axis=0).shape[0]
        assert np.unique(E.round(12), axis=0).shape[0] == distinct_rows

    @pytest.mark.parametrize("latent", [0, 10])
    def test_latent_bounds(self, breast_cancer, latent):
        with pytest.raises(ConfigurationError):
            train_autoencoder(breast_cancer, latent)

    def test_record_round_trip(self, autoencoder):
        doc = models.autoencoder_to_dict(autoencoder, dataset="breast_cancer")
        back = models.autoencoder_from_dict(json.loads(json.dumps(doc)))
        assert back.fingerprint == autoencoder.fingerprint
        assert back.noise_sigma == autoencoder.noise_sigma

    def test_identity_autoencoder(self, rng):
        ae = models.identity_autoencoder(4)
        x = rng.normal(size=(10, 4))
        assert embed(ae, x).tobytes() == x.tobytes()
