"""Tabular datasets: loading, scaling, fold assignment, splits and the
sensitive-attribute swaps used by prediction consistency."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .exceptions import DataError

__all__ = [
    "Dataset",
    "Schema",
    "SensitiveSpec",
    "FoldAssignment",
    "Scaler",
    "load_csv",
    "stratified_kfold",
    "perturb_sensitive",
    "perturb_matrix",
    "split_by_attribute",
    "write_folds_csv",
]


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Numeric feature matrix with binary labels.

    Arrays are copied and made read-only on construction.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple = ()

    def __post_init__(self):
        X = _frozen(self.features)
        y = _frozen(self.labels)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if X.shape[0] < 2 or X.shape[1] < 1:
            raise DataError(f"need n >= 2 and m >= 1, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain missing or non-finite values")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("labels must be 0 or 1")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError(f"{len(names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def m(self):
        return self.features.shape[1]

    def column(self, name_or_index):
        """Resolve a feature name (or pass through an index) to a column index."""
        if isinstance(name_or_index, (int, np.integer)):
            idx = int(name_or_index)
            if not 0 <= idx < self.m:
                raise DataError(f"column index {idx} out of range for m={self.m}")
            return idx
        try:
            return self.feature_names.index(name_or_index)
        except ValueError:
            raise DataError(f"unknown column {name_or_index!r}") from None

    def subset(self, rows):
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.labels[rows], self.feature_names)

    def with_features(self, features):
        return Dataset(features, self.labels, self.feature_names)

    def has_both_classes(self):
        return 0 < self.labels.sum() < self.n


@dataclass(frozen=True)
class Schema:
    """Column roles for :func:`load_csv`.

    ``positive_label`` is the raw label value mapped to 1; every other value
    maps to 0. When ``None`` the label column must already be coded 0/1.
    """

    label: str
    positive_label: object = None
    categorical: tuple = ()
    drop: tuple = ()

    @classmethod
    def from_dict(cls, d):
        if "label" not in d:
            raise DataError("schema must name a label column")
        return cls(
            label=d["label"],
            positive_label=d.get("positive_label"),
            categorical=tuple(d.get("categorical", ())),
            drop=tuple(d.get("drop", ())),
        )


@dataclass(frozen=True)
class SensitiveSpec:
    """A named sensitive attribute and how to swap its categories.

    Each entry of ``swap_groups`` is a tuple of column indices: a single index
    is a binary column flipped ``x -> 1 - x``; a pair is two mutually exclusive
    one-hot columns whose values are exchanged. Both are involutions.
    """

    name: str
    swap_groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(int(c) for c in g) for g in self.swap_groups)
        if not groups:
            raise DataError(f"sensitive spec {self.name!r} has no swap groups")
        for g in groups:
            if len(g) not in (1, 2) or len(set(g)) != len(g):
                raise DataError(
                    f"swap group {g} in {self.name!r} must be one binary column "
                    "or two distinct one-hot columns")
        object.__setattr__(self, "swap_groups", groups)

    @classmethod
    def from_names(cls, name, groups, feature_names):
        """Build a spec from column names, e.g. ``[["sex"], ["age"]]``."""
        names = list(feature_names)
        resolved = []
        for g in groups:
            if isinstance(g, str):
                g = [g]
            try:
                resolved.append(tuple(names.index(c) for c in g))
            except ValueError as exc:
                raise DataError(f"sensitive spec {name!r}: {exc}") from None
        return cls(name, tuple(resolved))

    def columns(self):
        return sorted({c for g in self.swap_groups for c in g})

    def validate(self, m):
        for c in self.columns():
            if not 0 <= c < m:
                raise DataError(f"sensitive spec {self.name!r} references column {c} >= m={m}")


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of: np.ndarray
    k: int = field(default=0)

    def __post_init__(self):
        f = _frozen(self.fold_of, dtype=np.int64)
        object.__setattr__(self, "fold_of", f)
        if not self.k:
            object.__setattr__(self, "k", int(f.max()) + 1)

    def train_index(self, fold):
        return np.flatnonzero(self.fold_of != fold)

    def test_index(self, fold):
        return np.flatnonzero(self.fold_of == fold)

    def splits(self):
        for fold in range(self.k):
            yield fold, self.train_index(fold), self.test_index(fold)


# ---------------------------------------------------------------------------
# loading

def _label_vector(raw, positive_label):
    values = pd.unique(raw)
    if positive_label is None:
        try:
            y = raw.astype(float).to_numpy()
        except (TypeError, ValueError):
            raise DataError("label column is not numeric and no positive_label given") from None
        if not np.all((y == 0) | (y == 1)):
            raise DataError(f"label values {sorted(values)} are not 0/1; set positive_label")
        return y
    if len(values) > 2:
        raise DataError(f"label column has {len(values)} distinct values, expected 2")
    if pd.api.types.is_numeric_dtype(raw):
        try:
            pos = float(positive_label)
        except (TypeError, ValueError):
            raise DataError(f"positive_label {positive_label!r} is not numeric") from None
        return (raw.astype(float).to_numpy() == pos).astype(float)
    return (raw.astype(str).to_numpy() == str(positive_label)).astype(float)


def load_csv(path, schema):
    """Read a headered CSV into a :class:`Dataset`.

    Categorical columns named in ``schema`` are one-hot encoded as
    ``name=value`` columns (categories sorted); every other column must be
    numeric. Missing cells, non-numeric cells and single-class labels raise
    :class:`DataError`.
    """
    if isinstance(schema, dict):
        schema = Schema.from_dict(schema)
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    df.columns = [c.strip() for c in df.columns]
    if schema.label not in df.columns:
        raise DataError(f"label column {schema.label!r} not in {path}")
    df = df.apply(lambda s: s.str.strip())
    empty = (df == "") | df.isin(["NA", "NaN", "nan", "?"])
    if empty.to_numpy().any():
        r, c = np.argwhere(empty.to_numpy())[0]
        raise DataError(f"missing value at row {r + 1}, column {df.columns[c]!r}")

    raw_label = df[schema.label]
    if _all_numeric(raw_label):
        raw_label = pd.to_numeric(raw_label)
    y = _label_vector(raw_label, schema.positive_label)
    if y.sum() in (0, len(y)):
        raise DataError("labels contain a single class")

    feats = df.drop(columns=[schema.label, *[c for c in schema.drop if c in df.columns]])
    for c in schema.categorical:
        if c not in feats.columns:
            raise DataError(f"categorical column {c!r} not in {path}")
    blocks, names = [], []
    for c in feats.columns:
        col = feats[c]
        if c in schema.categorical:
            for cat in sorted(pd.unique(col)):
                blocks.append((col == cat).astype(float).to_numpy())
                names.append(f"{c}={cat}")
            continue
        values = pd.to_numeric(col, errors="coerce")
        if values.isna().any():
            bad = int(np.flatnonzero(values.isna().to_numpy())[0])
            raise DataError(
                f"non-numeric value {col.iloc[bad]!r} at row {bad + 1}, column {c!r}")
        blocks.append(values.astype(float).to_numpy())
        names.append(c)
    if not blocks:
        raise DataError("no feature columns")
    return Dataset(np.column_stack(blocks), y, tuple(names))


def _all_numeric(s):
    return not pd.to_numeric(s, errors="coerce").isna().any()


# ---------------------------------------------------------------------------
# scaling

class Scaler:
    """Per-column affine scaling fitted on one partition and applied to others.

    Only columns holding a value outside {0, 1} in the fitting partition are
    rescaled, so binary and one-hot columns (including sensitive attributes)
    pass through unchanged. ``kind`` is ``"zscore"``, ``"minmax"`` or ``"none"``.
    """

    KINDS = ("zscore", "minmax", "none")

    def __init__(self, kind="zscore"):
        if kind not in self.KINDS:
            raise DataError(f"unknown scaling {kind!r}; expected one of {self.KINDS}")
        self.kind = kind
        self.offset_ = None
        self.scale_ = None

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        m = X.shape[1]
        offset, scale = np.zeros(m), np.ones(m)
        if self.kind != "none":
            cont = ~np.all((X == 0) | (X == 1), axis=0)
            if self.kind == "zscore":
                loc, spread = X.mean(axis=0), X.std(axis=0)
            else:
                loc, spread = X.min(axis=0), X.max(axis=0) - X.min(axis=0)
            spread = np.where(spread > 0, spread, 1.0)
            offset[cont], scale[cont] = loc[cont], spread[cont]
        self.offset_, self.scale_ = offset, scale
        return self

    def transform(self, X):
        if self.offset_ is None:
            raise DataError("Scaler used before fit")
        return (np.asarray(X, dtype=float) - self.offset_) / self.scale_

    def fit_transform(self, X):
        return self.fit(X).transform(X)

    def apply(self, dataset):
        return dataset.with_features(self.transform(dataset.features))


# ---------------------------------------------------------------------------
# folds, splits, perturbations

def stratified_kfold(dataset, k, seed):
    """Stratified fold assignment.

    Indices of each class are shuffled with a seeded generator and dealt
    round-robin into ``k`` folds; the dealing position carries over from one
    class to the next so fold sizes differ by at most one.
    """
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    y = np.asarray(dataset.labels if isinstance(dataset, Dataset) else dataset)
    rng = np.random.default_rng(seed)
    fold_of = np.full(len(y), -1, dtype=np.int64)
    start = 0
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if len(idx) < k:
            raise DataError(f"class {cls} has {len(idx)} members, fewer than k={k}")
        rng.shuffle(idx)
        fold_of[idx] = (start + np.arange(len(idx))) % k
        start = (start + len(idx)) % k
    return FoldAssignment(fold_of, k)


def write_folds_csv(assignment, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_index", "fold"])
        for i, f in enumerate(assignment.fold_of):
            w.writerow([i, int(f)])


def perturb_matrix(X, spec):
    """Return a copy of ``X`` with the sensitive categories of ``spec`` swapped."""
    X = np.array(X, dtype=float, copy=True)
    spec.validate(X.shape[1])
    for group in spec.swap_groups:
        block = X[:, list(group)]
        if not np.all((block == 0) | (block == 1)):
            raise DataError(f"sensitive columns {group} of {spec.name!r} are not 0/1")
        if len(group) == 1:
            X[:, group[0]] = 1.0 - X[:, group[0]]
        else:
            a, b = group
            X[:, [a, b]] = X[:, [b, a]]
    return X


def perturb_sensitive(dataset, spec):
    return dataset.with_features(perturb_matrix(dataset.features, spec))


def split_by_attribute(dataset, column, source_value):
    """Partition rows on ``features[:, column] == source_value``.

    Returns ``(source, target)`` with row order preserved on both sides.
    """
    col = dataset.column(column)
    mask = dataset.features[:, col] == source_value
    if mask.all() or not mask.any():
        raise DataError(
            f"split on {dataset.feature_names[col]!r} == {source_value} leaves one side empty")
    return dataset.subset(np.flatnonzero(mask)), dataset.subset(np.flatnonzero(~mask))
