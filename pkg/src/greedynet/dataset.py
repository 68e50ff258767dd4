"""CSV loading, normalization, and stratified splitting.

Datasets are plain float64 feature matrices with dense integer labels.
Labels in the source file may be arbitrary strings or numbers; they are
remapped to 0..c-1 in order of first appearance.  Features are normalized
per column to [-1, 1] using bounds measured on the training split only; a
test split normalized with training bounds may exceed that range, which is
reported rather than clipped.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

__all__ = [
    "Dataset",
    "NormalizeParams",
    "SplitSpec",
    "load_csv",
    "load_csv_pair",
    "load_digits_dataset",
    "normalize",
    "apply_normalization",
    "split",
    "one_hot",
    "one_hot_matrix",
    "out_of_range_fraction",
]


@dataclass(frozen=True)
class NormalizeParams:
    """Per-column bounds mapping raw features onto [-1, 1]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("normalization bounds must be matching vectors")
        if np.any(hi < lo):
            raise ValueError("normalization bounds must satisfy lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def apply(self, features: np.ndarray) -> np.ndarray:
        """Map raw features to [-1, 1]; constant columns map to 0."""
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        scaled = 2.0 * (features - self.lo) / safe - 1.0
        return np.where(span > 0, scaled, 0.0)

    def invert(self, features: np.ndarray) -> np.ndarray:
        """Undo apply; constant columns recover their single value."""
        span = self.hi - self.lo
        return np.where(span > 0, (features + 1.0) * span / 2.0 + self.lo, self.lo)


@dataclass
class Dataset:
    """Feature matrix, dense labels, and the normalization that produced it."""

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    name: str = "dataset"
    norm: NormalizeParams | None = None

    def __post_init__(self) -> None:
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must align with feature rows")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain non-finite values")
        if self.class_count < 1:
            raise ValueError("class_count must be positive")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError("labels must lie in [0, class_count)")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    """Stratified train/test split parameters."""

    test_fraction: float
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie strictly between 0 and 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _looks_like_header(row: list[str], label_idx: int) -> bool:
    """Non-numeric tokens outside the label column mark a header row.

    The label column is skipped because string class labels are legal data.
    """
    for c, tok in enumerate(row):
        if c == label_idx:
            continue
        try:
            float(tok)
        except ValueError:
            return True
    return False


def _parse_csv(path, label_column: int, has_header: bool | None) -> tuple[np.ndarray, list[str]]:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")

    width = len(rows[0])
    if width < 2:
        raise ValueError(f"{path}: need at least one feature column and a label column")
    label_idx = label_column if label_column >= 0 else width + label_column
    if not 0 <= label_idx < width:
        raise ValueError(f"label column {label_column} out of range for {width} columns")

    if has_header is None:
        has_header = len(rows) > 1 and _looks_like_header(rows[0], label_idx)
    if has_header:
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")

    features = np.empty((len(rows), width - 1), dtype=np.float64)
    raw_labels: list[str] = []
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {r + 1} has {len(row)} columns, expected {width}")
        col = 0
        for c, tok in enumerate(row):
            if c == label_idx:
                raw_labels.append(tok.strip())
                continue
            try:
                value = float(tok)
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric feature at row {r + 1}, col {c + 1}"
                ) from None
            if not np.isfinite(value):
                raise ValueError(f"{path}: non-finite feature at row {r + 1}, col {c + 1}")
            features[r, col] = value
            col += 1
    return features, raw_labels


def _dense_labels(raw_labels: list[str], mapping: dict[str, int], extend: bool) -> np.ndarray:
    labels = np.empty(len(raw_labels), dtype=np.int64)
    for i, raw in enumerate(raw_labels):
        if raw not in mapping:
            if not extend:
                raise ValueError(f"label {raw!r} does not appear in the training data")
            mapping[raw] = len(mapping)
        labels[i] = mapping[raw]
    return labels


def _basename(path) -> str:
    return os.path.splitext(os.path.basename(str(path)))[0]


def load_csv(path, label_column: int = -1, has_header: bool | None = None, name: str | None = None) -> Dataset:
    """Read a CSV of numeric features plus one label column.

    Labels map to 0..c-1 in order of first appearance.  ``has_header`` None
    auto-detects: a first row with any non-numeric token is treated as a
    header.  Row and column numbers in error messages are 1-based over data
    rows.
    """
    features, raw_labels = _parse_csv(path, label_column, has_header)
    mapping: dict[str, int] = {}
    labels = _dense_labels(raw_labels, mapping, extend=True)
    if len(mapping) < 2:
        raise ValueError(f"{path}: need at least 2 distinct classes, found {len(mapping)}")
    return Dataset(features, labels, class_count=len(mapping), name=name or _basename(path))


def load_csv_pair(
    train_path,
    test_path,
    label_column: int = -1,
    has_header: bool | None = None,
) -> tuple[Dataset, Dataset]:
    """Read a pre-split pair of CSVs with one shared label mapping.

    The mapping is fixed by the training file; a test label that never
    occurs in training is an error.
    """
    train_feat, train_raw = _parse_csv(train_path, label_column, has_header)
    test_feat, test_raw = _parse_csv(test_path, label_column, has_header)
    if train_feat.shape[1] != test_feat.shape[1]:
        raise ValueError(
            f"{test_path}: {test_feat.shape[1]} feature columns, "
            f"training file has {train_feat.shape[1]}"
        )
    mapping: dict[str, int] = {}
    train_labels = _dense_labels(train_raw, mapping, extend=True)
    if len(mapping) < 2:
        raise ValueError(f"{train_path}: need at least 2 distinct classes, found {len(mapping)}")
    test_labels = _dense_labels(test_raw, mapping, extend=False)
    c = len(mapping)
    name = _basename(train_path)
    return (
        Dataset(train_feat, train_labels, c, name),
        Dataset(test_feat, test_labels, c, name),
    )


def load_digits_dataset() -> Dataset:
    """The bundled 8x8 handwritten-digit set (1797 examples, 10 classes)."""
    ref = resources.files("greedynet").joinpath("data/digits.csv")
    with resources.as_file(ref) as path:
        return load_csv(path, label_column=-1, has_header=True, name="digits")


def normalize(ds: Dataset) -> Dataset:
    """Rescale each feature column to [-1, 1] and record the bounds."""
    params = NormalizeParams(ds.features.min(axis=0), ds.features.max(axis=0))
    return Dataset(params.apply(ds.features), ds.labels, ds.class_count, ds.name, params)


def apply_normalization(ds: Dataset, params: NormalizeParams) -> Dataset:
    """Rescale with bounds measured elsewhere (test data with train bounds)."""
    if params.lo.shape != (ds.n_features,):
        raise ValueError("normalization bounds do not match feature count")
    return Dataset(params.apply(ds.features), ds.labels, ds.class_count, ds.name, params)


def out_of_range_fraction(ds: Dataset) -> float:
    """Fraction of feature entries outside [-1, 1] after normalization."""
    return float(np.mean(np.abs(ds.features) > 1.0 + 1e-12))


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Stratified split: round(test_fraction * n_k) of each class k to test.

    Within each class the assignment is a seeded shuffle; each split keeps
    the original row order.  The unnormalized class requirement is only that
    every class has at least 2 members so both sides can see it.
    """
    rng = np.random.default_rng(spec.seed)
    test_mask = np.zeros(len(ds), dtype=bool)
    for k in range(ds.class_count):
        members = np.flatnonzero(ds.labels == k)
        if len(members) < 2:
            raise ValueError(f"class {k} too small to stratify")
        n_test = int(round(spec.test_fraction * len(members)))
        chosen = rng.permutation(members)[:n_test]
        test_mask[chosen] = True
    if not test_mask.any() or test_mask.all():
        raise ValueError("split left one side empty; adjust test_fraction")
    train_idx = np.flatnonzero(~test_mask)
    test_idx = np.flatnonzero(test_mask)
    train = Dataset(ds.features[train_idx], ds.labels[train_idx], ds.class_count, ds.name, ds.norm)
    test = Dataset(ds.features[test_idx], ds.labels[test_idx], ds.class_count, ds.name, ds.norm)
    return train, test


def one_hot(label: int, class_count: int) -> np.ndarray:
    """Unit vector for one label."""
    if not 0 <= label < class_count:
        raise ValueError(f"label {label} out of range for {class_count} classes")
    v = np.zeros(class_count, dtype=np.float64)
    v[label] = 1.0
    return v


def one_hot_matrix(labels: np.ndarray, class_count: int) -> np.ndarray:
    """One-hot rows for a label vector."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) and (labels.min() < 0 or labels.max() >= class_count):
        raise ValueError("labels out of range")
    out = np.zeros((len(labels), class_count), dtype=np.float64)
    out[np.arange(len(labels)), labels] = 1.0
    return out
