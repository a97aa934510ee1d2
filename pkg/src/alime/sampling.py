"""Synthetic Gaussian sample pools and their cached latent embeddings."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ShapeError
from .models import DenoisingAutoencoder, embed

# numpy Generator(PCG64(seed)).standard_normal, ziggurat transform, row-major fill
GENERATOR_TAG = "numpy.PCG64.standard_normal"
POOL_FORMAT = "alime.pool"


@dataclass(frozen=True)
class SamplePool:
    points: np.ndarray
    seed: int
    embeddings: np.ndarray | None = None
    encoder_id: str | None = None
    generator: str = GENERATOR_TAG

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] < 2:
            raise ConfigurationError(f"a pool needs at least 2 points, got shape {self.points.shape}")
        if self.embeddings is not None and self.embeddings.shape[0] != self.points.shape[0]:
            raise ShapeError("embeddings must row-align with points")
        self.points.setflags(write=False)
        if self.embeddings is not None:
            self.embeddings.setflags(write=False)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def checksum(self) -> str:
        h = hashlib.sha256(self.points.tobytes())
        if self.embeddings is not None:
            h.update(self.embeddings.tobytes())
        return h.hexdigest()


def sample_pool(k: int, m: int, seed: int) -> SamplePool:
    """m i.i.d. draws from N(0, I_k) in standardized feature space."""
    if m < 2:
        raise ConfigurationError(f"pool size must be at least 2, got {m}")
    if k < 1:
        raise ConfigurationError(f"feature count must be positive, got {k}")
    points = np.random.default_rng(seed).standard_normal((m, k))
    return SamplePool(points=points, seed=seed)


def attach_embeddings(pool: SamplePool, ae: DenoisingAutoencoder) -> SamplePool:
    if ae.n_features != pool.k:
        raise ConfigurationError(f"autoencoder expects {ae.n_features} features, pool has {pool.k}")
    fp = ae.fingerprint
    if pool.embeddings is not None and pool.encoder_id == fp:
        return pool
    return replace(pool, embeddings=embed(ae, pool.points), encoder_id=fp)


def pool_to_dict(pool: SamplePool) -> dict:
    return {
        "format": POOL_FORMAT,
        "version": 1,
        "generator": pool.generator,
        "seed": pool.seed,
        "m": pool.m,
        "k": pool.k,
        "encoder_id": pool.encoder_id,
        "points": pool.points.tolist(),
        "embeddings": None if pool.embeddings is None else pool.embeddings.tolist(),
    }


def pool_from_dict(doc: dict) -> SamplePool:
    if doc.get("format") != POOL_FORMAT:
        raise ConfigurationError(f"not a pool document: {doc.get('format')!r}")
    emb = doc.get("embeddings")
    return SamplePool(
        points=np.asarray(doc["points"], dtype=np.float64).reshape(doc["m"], doc["k"]),
        seed=int(doc["seed"]),
        embeddings=None if emb is None else np.asarray(emb, dtype=np.float64).reshape(doc["m"], -1),
        encoder_id=doc.get("encoder_id"),
        generator=doc.get("generator", GENERATOR_TAG),
    )


def save_pool(pool: SamplePool, path: str | Path) -> None:
    Path(path).write_text(json.dumps(pool_to_dict(pool)), encoding="utf-8")


def load_pool(path: str | Path) -> SamplePool:
    return pool_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
