"""Fidelity and stability sweeps comparing LIME and ALIME.

Fidelity: for every test instance and pool size ``n``, the weighted R^2 of
the surrogate on its own fit points and the squared error between surrogate
and black box at the instance, each averaged over the test set.

Stability: one seeded test instance is explained ``iterations`` times with
fresh randomness; the absolute coefficients give a per-feature sample std
(ddof 1) and std/mean ratio, averaged over features.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .dataset import TabularDataset
from .errors import ConfigurationError
from .explain import DEFAULT_ALPHA, METHODS, Explanation, Predictor, explain_alime, explain_lime
from .models import DenoisingAutoencoder
from .sampling import SamplePool, attach_embeddings, sample_pool

DEFAULT_N_VALUES = (100, 200, 500, 1000, 2000, 5000, 10000)
DEFAULT_POOL_SIZE = 10_000
DEFAULT_ITERATIONS = 10

ExplainFn = Callable[[np.ndarray, int], Explanation]


def derive_seed(base: int, *keys: int) -> int:
    """Independent 32-bit seed for a (base, keys...) combination."""
    seq = np.random.SeedSequence([int(base), *map(int, keys)])
    return int(seq.generate_state(1)[0])


def _check_sweep(n_values: Sequence[int], method: str, pool_size: int | None = None) -> list[int]:
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; expected one of {METHODS}")
    ns = [int(n) for n in n_values]
    if not ns:
        raise ConfigurationError("sweep needs at least one n value")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigurationError(f"n values must be strictly increasing, got {ns}")
    if ns[0] < 2:
        raise ConfigurationError("n values must be at least 2")
    if pool_size is not None and ns[-1] > pool_size:
        raise ConfigurationError(f"n = {ns[-1]} exceeds the pool size {pool_size}")
    return ns


@dataclass
class FidelityReport:
    dataset: str
    method: str
    sweep: list[dict]  # {"n", "mean_r2", "mean_mse"}
    n_test: int
    seeds: dict
    config: dict = field(default_factory=dict)

    @property
    def n_values(self) -> list[int]:
        return [row["n"] for row in self.sweep]

    def metric(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.sweep])

    def to_dict(self) -> dict:
        return {"kind": "fidelity", **asdict(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "FidelityReport":
        doc = {k: v for k, v in doc.items() if k != "kind"}
        return cls(**doc)

    def csv_rows(self) -> list[tuple]:
        return [
            (self.dataset, self.method, row["n"], metric, row[metric])
            for row in self.sweep
            for metric in ("mean_r2", "mean_mse")
        ]


@dataclass
class StabilityReport:
    dataset: str
    method: str
    instance_index: int  # row id in the full dataset
    test_position: int  # position within the test split
    sweep: list[dict]  # {"n", "mean_std", "mean_cv"}
    iterations: int
    seeds: dict
    config: dict = field(default_factory=dict)

    @property
    def n_values(self) -> list[int]:
        return [row["n"] for row in self.sweep]

    def metric(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.sweep])

    def to_dict(self) -> dict:
        return {"kind": "stability", **asdict(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "StabilityReport":
        doc = {k: v for k, v in doc.items() if k != "kind"}
        return cls(**doc)

    def csv_rows(self) -> list[tuple]:
        return [
            (self.dataset, self.method, row["n"], metric, row[metric])
            for row in self.sweep
            for metric in ("mean_std", "mean_cv")
        ]


def report_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind == "fidelity":
        return FidelityReport.from_dict(doc)
    if kind == "stability":
        return StabilityReport.from_dict(doc)
    raise ConfigurationError(f"unknown report kind {kind!r}")


# -- fidelity --------------------------------------------------------------


def explain_test_instance(
    f: Predictor,
    ae: DenoisingAutoencoder | None,
    pool: SamplePool | None,
    data: TabularDataset,
    method: str,
    n: int,
    position: int,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    scale: float = 1.0,
) -> Explanation:
    """The explanation a fidelity sweep computes for one (n, test position) cell."""
    x = data.X_test[position]
    if method == "lime":
        return explain_lime(
            f, x, n, alpha, derive_seed(seed, n, position), scale=scale, feature_names=data.feature_names
        )
    return explain_alime(f, ae, pool, x, n, alpha, scale=scale, feature_names=data.feature_names)


def fidelity_sweep(
    f: Predictor,
    ae: DenoisingAutoencoder | None,
    pool: SamplePool | None,
    data: TabularDataset,
    method: str,
    n_values: Sequence[int] = DEFAULT_N_VALUES,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    *,
    positions: Sequence[int] | None = None,
    scale: float = 1.0,
) -> FidelityReport:
    """Mean local R^2 and mean instance MSE over test instances for each n.

    LIME draws a fresh pool per (n, instance) from ``derive_seed(seed, n,
    position)``; ALIME reuses ``pool`` throughout.
    """
    if method == "alime":
        if ae is None or pool is None:
            raise ConfigurationError("ALIME needs an autoencoder and an embedded pool")
        pool = attach_embeddings(pool, ae)
    ns = _check_sweep(n_values, method, pool.m if method == "alime" else None)
    if positions is None:
        positions = range(len(data.test_idx))
    positions = [int(p) for p in positions]
    if not positions:
        raise ConfigurationError("no test instances to explain")

    sweep = []
    for n in ns:
        r2 = np.empty(len(positions))
        mse = np.empty(len(positions))
        for i, pos in enumerate(positions):
            e = explain_test_instance(f, ae, pool, data, method, n, pos, alpha, seed, scale)
            r2[i] = e.local_r2
            mse[i] = e.local_mse
        sweep.append({"n": n, "mean_r2": float(np.mean(r2)), "mean_mse": float(np.mean(mse))})

    seeds = {"base": seed, "lime_scheme": "derive_seed(base, n, test_position)"}
    if method == "alime":
        seeds["pool"] = pool.seed
    return FidelityReport(
        dataset=data.name,
        method=method,
        sweep=sweep,
        n_test=len(positions),
        seeds=seeds,
        config={
            "alpha": alpha,
            "kernel_scale": scale,
            "r2": "kernel-weighted, on fit points",
            "pool_size": pool.m if method == "alime" else None,
            "test_positions": positions,
        },
    )


# -- stability -------------------------------------------------------------


def lime_explainer(f: Predictor, n: int, alpha: float = DEFAULT_ALPHA, scale: float = 1.0) -> ExplainFn:
    def run(x, seed):
        return explain_lime(f, x, n, alpha, seed, scale=scale)

    return run


def alime_explainer(
    f: Predictor,
    ae: DenoisingAutoencoder,
    n: int,
    m: int = DEFAULT_POOL_SIZE,
    alpha: float = DEFAULT_ALPHA,
    scale: float = 1.0,
    pool_cache: dict | None = None,
) -> ExplainFn:
    """ALIME that draws and embeds a fresh pool of size m for every seed.

    ``pool_cache`` (seed -> embedded pool) lets several explainers share pools.
    """
    cache = {} if pool_cache is None else pool_cache

    def run(x, seed):
        pool = cache.get(seed)
        if pool is None:
            pool = cache[seed] = attach_embeddings(sample_pool(ae.n_features, m, seed), ae)
        return explain_alime(f, ae, pool, x, n, alpha, scale=scale)

    return run


def stability_run(explain_fn: ExplainFn, x, iterations: int = DEFAULT_ITERATIONS, base_seed: int = 0) -> np.ndarray:
    """Absolute coefficients of ``iterations`` explanations, seeds base_seed + i."""
    if iterations < 2:
        raise ConfigurationError("need at least 2 iterations")
    x = np.asarray(x, dtype=np.float64)
    return np.abs(np.array([explain_fn(x, base_seed + i).coefficients for i in range(iterations)]))


def stability_metrics(coeffs) -> tuple[float, float]:
    """(mean per-feature std, mean per-feature std/mean) of |coefficients|.

    Features whose mean absolute coefficient is zero contribute 0 to the ratio.
    """
    C = np.abs(np.asarray(coeffs, dtype=np.float64))
    if C.ndim != 2 or C.shape[0] < 2:
        raise ConfigurationError("need an iterations x features matrix with at least 2 rows")
    std = C.std(axis=0, ddof=1)
    mean = C.mean(axis=0)
    safe = np.where(mean > 0, mean, 1.0)
    cv = np.where(mean > 0, std / safe, 0.0)
    return float(std.mean()), float(cv.mean())


def pick_stability_instance(data: TabularDataset, seed: int) -> int:
    """Seeded random position within the test split."""
    return int(np.random.default_rng(seed).integers(len(data.test_idx)))


def stability_sweep(
    f: Predictor,
    ae: DenoisingAutoencoder | None,
    data: TabularDataset,
    method: str,
    n_values: Sequence[int] = DEFAULT_N_VALUES,
    iterations: int = DEFAULT_ITERATIONS,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    *,
    m: int = DEFAULT_POOL_SIZE,
    position: int | None = None,
    scale: float = 1.0,
    pool_cache: dict | None = None,
) -> StabilityReport:
    ns = _check_sweep(n_values, method, m if method == "alime" else None)
    if method == "alime" and ae is None:
        raise ConfigurationError("ALIME needs an autoencoder")
    if position is None:
        position = pick_stability_instance(data, seed)
    x = data.X_test[position]
    cache = {} if pool_cache is None else pool_cache
    sweep = []
    for n in ns:
        if method == "lime":
            fn = lime_explainer(f, n, alpha, scale)
        else:
            fn = alime_explainer(f, ae, n, m, alpha, scale, pool_cache=cache)
        mean_std, mean_cv = stability_metrics(stability_run(fn, x, iterations, seed))
        sweep.append({"n": n, "mean_std": mean_std, "mean_cv": mean_cv})
    return StabilityReport(
        dataset=data.name,
        method=method,
        instance_index=int(data.test_idx[position]),
        test_position=int(position),
        sweep=sweep,
        iterations=iterations,
        seeds={"base": seed, "iteration_scheme": "base + i", "instance": "default_rng(base).integers(n_test)"},
        config={"alpha": alpha, "kernel_scale": scale, "pool_size": m if method == "alime" else None},
    )


# -- comparison and output -------------------------------------------------


def fraction_at_least_as_good(candidate, baseline, metric: str, higher_is_better: bool) -> float:
    """Share of sweep points where ``candidate`` is no worse than ``baseline``."""
    if candidate.n_values != baseline.n_values:
        raise ConfigurationError("reports cover different sweeps")
    a, b = candidate.metric(metric), baseline.metric(metric)
    ok = a >= b if higher_is_better else a <= b
    return float(np.mean(ok))


CSV_HEADER = ("dataset", "method", "n", "metric", "value")


def write_csv(reports: Iterable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for report in reports:
            for dataset, method, n, metric, value in report.csv_rows():
                writer.writerow((dataset, method, n, metric, repr(float(value))))


def write_json(reports: Iterable, path: str | Path, config: dict | None = None) -> None:
    doc = {"config": config or {}, "reports": [r.to_dict() for r in reports]}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path: str | Path) -> list:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return [report_from_dict(r) for r in doc["reports"]]
