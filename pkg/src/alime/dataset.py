"""Loading, imputation, standardization and splitting of the UCI tables.

Three schemas are registered: ``breast_cancer`` (Wisconsin original, 699
rows), ``hepatitis`` (155 rows) and ``liver`` (Indian Liver Patient
Dataset, 583 rows). Each positive/diseased class is encoded as label 1.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateColumnError,
    InsufficientDataError,
    MalformedInputError,
)

MISSING_MARKERS = frozenset({"", "?"})


@dataclass(frozen=True)
class Schema:
    name: str
    n_columns: int
    label_column: int
    positive_label: float
    negative_label: float
    feature_names: tuple[str, ...]
    id_columns: tuple[int, ...] = ()
    # column index -> {lower-cased token: numeric code}
    categorical: dict[int, dict[str, float]] = field(default_factory=dict)
    filename: str | None = None

    @property
    def feature_columns(self) -> list[int]:
        skip = set(self.id_columns) | {self.label_column}
        return [c for c in range(self.n_columns) if c not in skip]


REGISTRY: dict[str, Schema] = {
    "breast_cancer": Schema(
        name="breast_cancer",
        n_columns=11,
        id_columns=(0,),
        label_column=10,
        positive_label=4.0,  # malignant
        negative_label=2.0,
        feature_names=(
            "clump_thickness",
            "uniformity_cell_size",
            "uniformity_cell_shape",
            "marginal_adhesion",
            "single_epithelial_cell_size",
            "bare_nuclei",
            "bland_chromatin",
            "normal_nucleoli",
            "mitoses",
        ),
        filename="breast-cancer-wisconsin.data",
    ),
    "hepatitis": Schema(
        name="hepatitis",
        n_columns=20,
        label_column=0,
        positive_label=1.0,  # DIE
        negative_label=2.0,
        feature_names=(
            "age",
            "sex",
            "steroid",
            "antivirals",
            "fatigue",
            "malaise",
            "anorexia",
            "liver_big",
            "liver_firm",
            "spleen_palpable",
            "spiders",
            "ascites",
            "varices",
            "bilirubin",
            "alk_phosphate",
            "sgot",
            "albumin",
            "protime",
            "histology",
        ),
        filename="hepatitis.data",
    ),
    "liver": Schema(
        name="liver",
        n_columns=11,
        label_column=10,
        positive_label=1.0,  # liver patient
        negative_label=2.0,
        feature_names=(
            "age",
            "gender",
            "total_bilirubin",
            "direct_bilirubin",
            "alkaline_phosphotase",
            "alamine_aminotransferase",
            "aspartate_aminotransferase",
            "total_proteins",
            "albumin",
            "albumin_globulin_ratio",
        ),
        categorical={1: {"female": 0.0, "male": 1.0}},
        filename="Indian Liver Patient Dataset (ILPD).csv",
    ),
}


def get_schema(name: str) -> Schema:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown dataset schema {name!r}; expected one of {sorted(REGISTRY)}"
        ) from None


def bundled_path(name: str) -> Path | None:
    """Path of the copy shipped inside the package, or None if not bundled."""
    schema = get_schema(name)
    if schema.filename is None:
        return None
    path = Path(str(resources.files("alime") / "data" / schema.filename))
    return path if path.exists() else None


@dataclass(frozen=True)
class RawDataset:
    """Unstandardized table; absent cells are NaN."""

    name: str
    rows: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.feature_names):
            raise MalformedInputError(
                f"expected {len(self.feature_names)} feature cells per row, "
                f"got array of shape {self.rows.shape}"
            )
        if self.labels.shape != (self.rows.shape[0],):
            raise MalformedInputError("labels must align with rows")
        counts = np.bincount(self.labels.astype(int), minlength=2)
        if counts.size != 2 or counts.min() < 2:
            raise InsufficientDataError(
                f"need at least 2 rows per class, got counts {counts.tolist()}"
            )
        self.rows.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.rows).sum())


def _parse_number(token: str) -> float | None:
    try:
        value = float(token)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _looks_like_header(cells: list[str]) -> bool:
    tokens = [c.strip() for c in cells if c.strip() not in MISSING_MARKERS]
    return bool(tokens) and all(_parse_number(t) is None for t in tokens)


def load_csv(path: str | Path, schema: str) -> RawDataset:
    """Parse a UCI-style comma separated file into a :class:`RawDataset`.

    A first row in which no cell parses as a number is treated as a header.
    ``?`` and empty cells become NaN.
    """
    layout = get_schema(schema)
    path = Path(path)
    rows: list[list[float]] = []
    labels: list[int] = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if lineno == 1 and _looks_like_header(cells):
                continue
            if len(cells) != layout.n_columns:
                raise MalformedInputError(
                    f"expected {layout.n_columns} columns, found {len(cells)}", line=lineno
                )
            record: list[float] = []
            for col in layout.feature_columns:
                token = cells[col].strip()
                if token in MISSING_MARKERS:
                    record.append(math.nan)
                    continue
                value = _parse_number(token)
                if value is None and col in layout.categorical:
                    value = layout.categorical[col].get(token.lower())
                if value is None:
                    raise MalformedInputError(
                        f"non-numeric cell {token!r} in column {col}", line=lineno
                    )
                record.append(value)
            label = _parse_number(cells[layout.label_column].strip())
            if label == layout.positive_label:
                labels.append(1)
            elif label == layout.negative_label:
                labels.append(0)
            else:
                raise MalformedInputError(
                    f"unexpected class label {cells[layout.label_column]!r}", line=lineno
                )
            rows.append(record)
    if not rows:
        raise InsufficientDataError(f"{path}: no data rows")
    return RawDataset(
        name=layout.name,
        rows=np.asarray(rows, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64),
        feature_names=layout.feature_names,
    )


def impute_missing(raw: RawDataset) -> RawDataset:
    """Replace every NaN by the mean of the present cells of its column."""
    rows = raw.rows
    missing = np.isnan(rows)
    if not missing.any():
        return raw
    present = ~missing
    counts = present.sum(axis=0)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        names = [raw.feature_names[i] for i in empty]
        raise DegenerateColumnError(f"no present cells in column(s) {names}")
    means = np.where(present, rows, 0.0).sum(axis=0) / counts
    filled = np.where(missing, means, rows)
    return RawDataset(raw.name, filled, raw.labels.copy(), raw.feature_names)


@dataclass(frozen=True)
class TabularDataset:
    name: str
    features: np.ndarray
    labels: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    feature_names: tuple[str, ...]
    seed: int
    test_fraction: float

    def __post_init__(self):
        for arr in (self.features, self.labels, self.means, self.stds, self.train_idx, self.test_idx):
            arr.setflags(write=False)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def X_train(self) -> np.ndarray:
        return self.features[self.train_idx]

    @property
    def y_train(self) -> np.ndarray:
        return self.labels[self.train_idx]

    @property
    def X_test(self) -> np.ndarray:
        return self.features[self.test_idx]

    @property
    def y_test(self) -> np.ndarray:
        return self.labels[self.test_idx]

    def destandardize(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X) * self.stds + self.means


def standardize_and_split(raw: RawDataset, test_fraction: float = 0.30, seed: int = 0) -> TabularDataset:
    """Seeded shuffle split, then z-score every column with training statistics.

    The test set holds ``floor(N * test_fraction)`` rows. Training columns with
    zero variance get std 1 and become all zeros.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if np.isnan(raw.rows).any():
        raise ConfigurationError("impute missing cells before standardizing")
    n = raw.rows.shape[0]
    if n < 10:
        raise InsufficientDataError(f"need at least 10 rows, got {n}")
    n_test = max(1, int(math.floor(n * test_fraction)))
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])

    train = raw.rows[train_idx]
    means = train.mean(axis=0)
    stds = train.std(axis=0)
    constant = np.ptp(train, axis=0) == 0.0
    stds = np.where(constant, 1.0, stds)
    features = (raw.rows - means) / stds
    features[:, constant] = 0.0
    return TabularDataset(
        name=raw.name,
        features=features,
        labels=raw.labels.copy(),
        means=means,
        stds=stds,
        train_idx=train_idx,
        test_idx=test_idx,
        feature_names=raw.feature_names,
        seed=seed,
        test_fraction=test_fraction,
    )


def load_dataset(schema: str, path: str | Path | None = None, test_fraction: float = 0.30, seed: int = 0) -> TabularDataset:
    """load_csv -> impute_missing -> standardize_and_split in one call."""
    if path is None:
        path = bundled_path(schema)
        if path is None:
            raise ConfigurationError(
                f"no bundled copy of {schema!r}; pass the path to the UCI file"
            )
    return standardize_and_split(impute_missing(load_csv(path, schema)), test_fraction, seed)
