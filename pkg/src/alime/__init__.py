"""LIME and autoencoder-weighted ALIME local explanations for tabular models."""
from .dataset import load_csv, impute_missing, load_dataset, standardize_and_split
from .explain import Explanation, explain_alime, explain_lime, weighted_ridge_fit
from .models import (
    BlackBoxPredictor,
    DenoisingAutoencoder,
    embed,
    predict_proba,
    train_autoencoder,
    train_blackbox,
)
from .sampling import SamplePool, attach_embeddings, sample_pool

__version__ = "0.1.0"
