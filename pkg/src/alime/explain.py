"""LIME and ALIME local surrogate explainers.

Both explainers share one pipeline: a neighbourhood of synthetic points,
black-box targets, exponential kernel weights ``exp(-d / scale)`` and a
weighted ridge fit. They differ only in where the neighbourhood comes from
and where distance is measured:

* LIME draws a fresh Gaussian pool per call and measures Euclidean
  distance to the instance in (standardized) feature space.
* ALIME reuses a precomputed pool, measures distance between latent
  embeddings and keeps only the ``n`` closest points.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ShapeError, SingularFitError
from .models import DenoisingAutoencoder, embed
from .sampling import SamplePool, sample_pool

Predictor = Callable[[np.ndarray], np.ndarray]
METHODS = ("lime", "alime")
DEFAULT_ALPHA = 1.0
R2_CONSTANT_RTOL = 1e-12


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def distances_from(points: np.ndarray, x) -> np.ndarray:
    """Row-wise Euclidean distance of ``points`` to ``x``."""
    x = np.asarray(x, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != x.shape[-1]:
        raise ShapeError(f"points {points.shape} incompatible with vector {x.shape}")
    return np.sqrt(np.sum((points - x) ** 2, axis=1))


def exp_kernel(d, scale: float = 1.0):
    """``exp(-d / scale)``; scale 1 gives the plain ``e^{-d}`` weight."""
    if not scale > 0:
        raise ConfigurationError(f"kernel scale must be positive, got {scale}")
    d = np.asarray(d, dtype=np.float64)
    if np.any(d < 0):
        raise ConfigurationError("distances must be non-negative")
    w = np.exp(-d / scale)
    return float(w) if w.ndim == 0 else w


@dataclass(frozen=True)
class KernelWeights:
    distances: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_distances(cls, distances, scale: float = 1.0) -> "KernelWeights":
        d = np.asarray(distances, dtype=np.float64)
        if not np.isfinite(d).all():
            raise ConfigurationError("distances must be finite")
        return cls(d, exp_kernel(d, scale))


def select_n_closest(pool: SamplePool, x_embedding, n: int):
    """Indices of the n pool points nearest to ``x_embedding`` in latent space.

    Sorted by distance; equal distances keep the lower index first.
    Returns ``(indices, distances)``.
    """
    if pool.embeddings is None:
        raise ConfigurationError("pool has no embeddings attached")
    if not 1 <= n <= pool.m:
        raise ConfigurationError(f"n must lie in [1, {pool.m}], got {n}")
    d = distances_from(pool.embeddings, x_embedding)
    order = np.argsort(d, kind="stable")[:n]
    return order, d[order]


def weighted_ridge_fit(X, y, w, alpha: float = DEFAULT_ALPHA):
    """Minimize ``sum w_i (y_i - X_i b - b0)^2 + alpha |b|^2``.

    The intercept is not penalized: the problem is solved on data centred at
    the weighted means. Returns ``(coefficients, intercept)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],) or w.shape != y.shape:
        raise ShapeError(f"X {X.shape}, y {y.shape}, w {w.shape} do not align")
    if X.shape[0] < 2:
        raise ConfigurationError("need at least 2 points to fit")
    if np.any(w <= 0):
        raise ConfigurationError("weights must be strictly positive")
    if alpha < 0:
        raise ConfigurationError("alpha must be non-negative")
    wsum = w.sum()
    x_bar = w @ X / wsum
    y_bar = w @ y / wsum
    Xc = X - x_bar
    yc = y - y_bar
    Xw = Xc * w[:, None]
    A = Xw.T @ Xc + alpha * np.eye(X.shape[1])
    rhs = Xw.T @ yc
    if alpha == 0 and np.linalg.cond(A) > 1.0 / np.finfo(float).eps:
        raise SingularFitError("normal equations are singular; use alpha > 0")
    try:
        beta = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError(str(exc)) from None
    return beta, float(y_bar - x_bar @ beta)


def weighted_r2(y, y_hat, w) -> float:
    """Weighted coefficient of determination.

    A constant target scores 1.0 when reproduced up to rounding (relative
    1e-12) and 0.0 otherwise.
    """
    y, y_hat, w = (np.asarray(a, dtype=np.float64) for a in (y, y_hat, w))
    if np.ptp(y) == 0.0:
        tol = R2_CONSTANT_RTOL * max(1.0, abs(float(y[0])))
        return 1.0 if np.max(np.abs(y - y_hat)) <= tol else 0.0
    y_bar = w @ y / w.sum()
    ss_res = float(w @ (y - y_hat) ** 2)
    ss_tot = float(w @ (y - y_bar) ** 2)
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class LocalDataset:
    """Neighbourhood used to fit one surrogate."""

    points: np.ndarray
    targets: np.ndarray
    kernel: KernelWeights
    indices: np.ndarray | None = None


@dataclass(frozen=True)
class Explanation:
    instance: np.ndarray
    coefficients: np.ndarray
    intercept: float
    local_r2: float
    local_mse: float
    method: str
    n_points: int
    seed: int
    alpha: float
    feature_names: tuple[str, ...]
    black_box_value: float = float("nan")
    surrogate_value: float = float("nan")
    max_distance: float = float("nan")
    extra: dict = field(default_factory=dict, compare=False)

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coefficients + self.intercept

    def to_dict(self) -> dict:
        out = asdict(self)
        out["instance"] = self.instance.tolist()
        out["coefficients"] = self.coefficients.tolist()
        out["feature_names"] = list(self.feature_names)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "Explanation":
        doc = dict(doc)
        doc["instance"] = np.asarray(doc["instance"], dtype=np.float64)
        doc["coefficients"] = np.asarray(doc["coefficients"], dtype=np.float64)
        doc["feature_names"] = tuple(doc["feature_names"])
        return cls(**doc)

    def bar_rows(self) -> list[tuple[str, float, str]]:
        """(feature, coefficient, sign) sorted by |coefficient|, largest first."""
        order = sorted(range(len(self.coefficients)), key=lambda i: (-abs(self.coefficients[i]), i))
        rows = []
        for i in order:
            c = float(self.coefficients[i])
            sign = "positive" if c > 0 else "negative" if c < 0 else "zero"
            rows.append((self.feature_names[i], c, sign))
        return rows


def _predict(f: Predictor, X: np.ndarray) -> np.ndarray:
    y = np.asarray(f(X), dtype=np.float64).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise ShapeError(f"predictor returned {y.shape[0]} values for {X.shape[0]} rows")
    return y


def _names(feature_names: Sequence[str] | None, k: int) -> tuple[str, ...]:
    if feature_names is None:
        return tuple(f"x{i}" for i in range(k))
    if len(feature_names) != k:
        raise ShapeError(f"{len(feature_names)} feature names for {k} features")
    return tuple(feature_names)


def lime_neighbourhood(f: Predictor, x, pool: SamplePool, scale: float = 1.0) -> LocalDataset:
    x = np.asarray(x, dtype=np.float64)
    d = distances_from(pool.points, x)
    return LocalDataset(pool.points, _predict(f, pool.points), KernelWeights.from_distances(d, scale))


def alime_neighbourhood(
    f: Predictor, ae: DenoisingAutoencoder, pool: SamplePool, x, n: int, scale: float = 1.0
) -> LocalDataset:
    if pool.embeddings is None:
        raise ConfigurationError("ALIME needs a pool with embeddings attached")
    if pool.encoder_id is not None and pool.encoder_id != ae.fingerprint:
        raise ConfigurationError("pool embeddings were produced by a different autoencoder")
    idx, d = select_n_closest(pool, embed(ae, np.asarray(x, dtype=np.float64)), n)
    points = pool.points[idx]
    return LocalDataset(points, _predict(f, points), KernelWeights.from_distances(d, scale), idx)


def fit_surrogate(
    f: Predictor,
    x,
    local: LocalDataset,
    alpha: float,
    method: str,
    seed: int,
    feature_names: Sequence[str] | None = None,
) -> Explanation:
    x = np.asarray(x, dtype=np.float64)
    w = local.kernel.weights
    beta, b0 = weighted_ridge_fit(local.points, local.targets, w, alpha)
    fitted = local.points @ beta + b0
    fx = float(_predict(f, x[None, :])[0])
    gx = float(x @ beta + b0)
    return Explanation(
        instance=x.copy(),
        coefficients=beta,
        intercept=b0,
        local_r2=weighted_r2(local.targets, fitted, w),
        local_mse=(gx - fx) ** 2,
        method=method,
        n_points=int(local.points.shape[0]),
        seed=int(seed),
        alpha=float(alpha),
        feature_names=_names(feature_names, x.shape[0]),
        black_box_value=fx,
        surrogate_value=gx,
        max_distance=float(local.kernel.distances.max()),
    )


def explain_lime(
    f: Predictor,
    x,
    n: int,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    *,
    pool: SamplePool | None = None,
    scale: float = 1.0,
    feature_names: Sequence[str] | None = None,
) -> Explanation:
    """Explain ``f`` at ``x`` from a fresh pool of ``n`` Gaussian points.

    Passing ``pool`` reuses given points instead of drawing them (``n`` is
    then ignored).
    """
    x = np.asarray(x, dtype=np.float64)
    if pool is None:
        pool = sample_pool(x.shape[0], n, seed)
    local = lime_neighbourhood(f, x, pool, scale)
    return fit_surrogate(f, x, local, alpha, "lime", pool.seed, feature_names)


def explain_alime(
    f: Predictor,
    ae: DenoisingAutoencoder,
    pool: SamplePool,
    x,
    n: int,
    alpha: float = DEFAULT_ALPHA,
    *,
    scale: float = 1.0,
    feature_names: Sequence[str] | None = None,
) -> Explanation:
    """Explain ``f`` at ``x`` from the ``n`` pool points closest in latent space."""
    local = alime_neighbourhood(f, ae, pool, x, n, scale)
    return fit_surrogate(f, x, local, alpha, "alime", pool.seed, feature_names)
