"""The black-box classifier and the denoising autoencoder."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import neural
from .dataset import TabularDataset
from .errors import ConfigurationError, MalformedInputError, ShapeError
from .neural import MlpModel, TrainConfig

HIDDEN_WIDTH = 30
DEFAULT_NOISE_SIGMA = 0.1
BLACKBOX_TRAIN = TrainConfig(epochs=200, batch_size=32, learning_rate=0.05, seed=0, loss="bce")
AUTOENCODER_TRAIN = TrainConfig(epochs=200, batch_size=32, learning_rate=0.05, seed=0, loss="mse")


@dataclass(frozen=True)
class BlackBoxPredictor:
    model: MlpModel
    positive_class_index: int = 1

    def __post_init__(self):
        if self.model.output_dim != 2 or self.model.layers[-1].activation != "softmax":
            raise ConfigurationError("black box must end in a 2-way softmax")
        if self.positive_class_index not in (0, 1):
            raise ConfigurationError("positive_class_index must be 0 or 1")

    @property
    def n_features(self) -> int:
        return self.model.input_dim

    def __call__(self, X) -> np.ndarray | float:
        return predict_proba(self, X)


def predict_proba(p: BlackBoxPredictor, x):
    """Positive-class probability for one row (float) or a batch (array)."""
    out = neural.forward(p.model, x)
    if out.ndim == 1:
        return float(out[p.positive_class_index])
    return out[:, p.positive_class_index]


def accuracy(p: BlackBoxPredictor, X, y) -> float:
    pred = (predict_proba(p, np.atleast_2d(X)) >= 0.5).astype(int)
    return float(np.mean(pred == np.asarray(y)))


def train_blackbox(data: TabularDataset, cfg: TrainConfig = BLACKBOX_TRAIN) -> BlackBoxPredictor:
    """K -> 30 (relu) -> 2 (softmax), trained with cross-entropy on the training rows."""
    if cfg.loss != "bce":
        raise ConfigurationError("the black box is trained with bce loss")
    k = data.n_features
    model = neural.init_model([k, HIDDEN_WIDTH, 2], ["relu", "softmax"], cfg.seed)
    y = data.y_train
    targets = np.stack([1 - y, y], axis=1).astype(np.float64)
    trained = neural.train(model, data.X_train, targets, cfg)
    return BlackBoxPredictor(trained, positive_class_index=1)


@dataclass(frozen=True)
class DenoisingAutoencoder:
    encoder: MlpModel
    decoder: MlpModel
    noise_sigma: float = DEFAULT_NOISE_SIGMA

    def __post_init__(self):
        if self.encoder.output_dim != self.decoder.input_dim:
            raise ShapeError("encoder output width must match decoder input width")
        if self.encoder.input_dim != self.decoder.output_dim:
            raise ShapeError("decoder must reconstruct the encoder's input width")
        if self.latent_dim > self.n_features:
            raise ConfigurationError("latent_dim cannot exceed the feature count")

    @property
    def latent_dim(self) -> int:
        return self.encoder.output_dim

    @property
    def n_features(self) -> int:
        return self.encoder.input_dim

    @property
    def fingerprint(self) -> str:
        """Content hash of the encoder; identifies which network produced an embedding."""
        return hashlib.sha256(neural.dumps(self.encoder).encode()).hexdigest()[:16]

    @property
    def loss_history(self) -> tuple[float, ...]:
        return self.encoder.loss_history


def default_latent_dim(k: int) -> int:
    return max(1, min(k - 1, 8))


def corrupt(x, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Additive white Gaussian noise with standard deviation ``sigma``."""
    if not sigma > 0:
        raise ConfigurationError(f"noise sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    return x + rng.normal(0.0, sigma, size=x.shape)


def train_autoencoder(
    data: TabularDataset,
    latent_dim: int | None = None,
    noise_sigma: float = DEFAULT_NOISE_SIGMA,
    cfg: TrainConfig = AUTOENCODER_TRAIN,
) -> DenoisingAutoencoder:
    """Train K -> H -> L -> H -> K on (corrupt(x), x) pairs, H = max(K, 8).

    Hidden layers use relu, the latent and output layers are linear. The
    corruption is redrawn every epoch.
    """
    k = data.n_features
    if latent_dim is None:
        latent_dim = default_latent_dim(k)
    if not 1 <= latent_dim <= k:
        raise ConfigurationError(f"latent_dim must lie in [1, {k}], got {latent_dim}")
    if cfg.loss != "mse":
        raise ConfigurationError("the autoencoder is trained with mse loss")
    if not noise_sigma > 0:
        raise ConfigurationError(f"noise sigma must be positive, got {noise_sigma}")
    hidden = max(k, 8)
    model = neural.init_model(
        [k, hidden, latent_dim, hidden, k], ["relu", "identity", "relu", "identity"], cfg.seed
    )
    X = data.X_train
    trained = neural.train(
        model, X, X, cfg, input_transform=lambda batch, rng: corrupt(batch, noise_sigma, rng)
    )
    encoder = MlpModel(trained.layers[:2], k, loss_history=trained.loss_history)
    decoder = MlpModel(trained.layers[2:], latent_dim)
    return DenoisingAutoencoder(encoder, decoder, noise_sigma)


def embed(ae: DenoisingAutoencoder, x) -> np.ndarray:
    """Encoder forward pass for one row or a batch."""
    return neural.forward(ae.encoder, x)


def reconstruct(ae: DenoisingAutoencoder, x) -> np.ndarray:
    return neural.forward(ae.decoder, embed(ae, x))


def reconstruction_mse(ae: DenoisingAutoencoder, X) -> float:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return float(np.mean((reconstruct(ae, X) - X) ** 2))


def identity_autoencoder(k: int) -> DenoisingAutoencoder:
    """Autoencoder whose encoder and decoder are both the identity map."""
    eye = neural.Layer(np.eye(k), np.zeros(k), "identity")
    model = MlpModel((eye,), k)
    return DenoisingAutoencoder(model, model, DEFAULT_NOISE_SIGMA)


# -- wrapper records -------------------------------------------------------


def blackbox_to_dict(p: BlackBoxPredictor, **provenance) -> dict:
    return {
        "kind": "blackbox",
        "positive_class_index": p.positive_class_index,
        **provenance,
        "model": neural.model_to_dict(p.model),
    }


def blackbox_from_dict(doc: dict) -> BlackBoxPredictor:
    if doc.get("kind") != "blackbox":
        raise ConfigurationError(f"expected a blackbox record, got {doc.get('kind')!r}")
    return BlackBoxPredictor(neural.model_from_dict(doc["model"]), int(doc["positive_class_index"]))


def autoencoder_to_dict(ae: DenoisingAutoencoder, **provenance) -> dict:
    return {
        "kind": "autoencoder",
        "latent_dim": ae.latent_dim,
        "noise_sigma": ae.noise_sigma,
        **provenance,
        "encoder": neural.model_to_dict(ae.encoder),
        "decoder": neural.model_to_dict(ae.decoder),
    }


def autoencoder_from_dict(doc: dict) -> DenoisingAutoencoder:
    if doc.get("kind") != "autoencoder":
        raise ConfigurationError(f"expected an autoencoder record, got {doc.get('kind')!r}")
    ae = DenoisingAutoencoder(
        neural.model_from_dict(doc["encoder"]),
        neural.model_from_dict(doc["decoder"]),
        float(doc["noise_sigma"]),
    )
    if ae.latent_dim != doc["latent_dim"]:
        raise ConfigurationError("latent_dim disagrees with the encoder width")
    return ae


def load_record(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedInputError(f"{path}: not valid JSON ({exc.msg})", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise MalformedInputError(f"{path}: expected a JSON object")
    return doc
