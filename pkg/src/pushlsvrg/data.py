"""Datasets, partitions across agents, and file loaders."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    """Labelled samples plus their assignment to agents.

    ``features`` is ``N x n``, ``labels`` holds +1/-1, and ``partition`` is a
    list of index arrays, one per agent (``None`` until :func:`partition` is
    applied).
    """

    features: np.ndarray
    labels: np.ndarray
    partition: list | None = None
    name: str = "dataset"

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=float).ravel()
        if self.features.shape[0] != self.labels.size:
            raise DatasetError(
                f"{self.features.shape[0]} feature rows but {self.labels.size} labels")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise DatasetError("labels must be +1 or -1")

    def __len__(self):
        return self.labels.size

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, idx, name=None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.labels[idx], name=name or self.name)

    def agent_samples(self, i):
        rows = self.partition[i]
        return self.features[rows], self.labels[rows]


def partition(dataset: Dataset, m: int, seed=0, shuffle=True) -> Dataset:
    """Split samples evenly among ``m`` agents.

    Indices are shuffled with ``seed``; when ``N`` is not a multiple of
    ``m`` the first ``N mod m`` agents get one extra sample.
    """
    N = len(dataset)
    if m < 1 or N < m:
        raise DatasetError(f"cannot split {N} samples among {m} agents")
    idx = np.random.default_rng(seed).permutation(N) if shuffle else np.arange(N)
    base, extra = divmod(N, m)
    sizes = [base + (i < extra) for i in range(m)]
    bounds = np.cumsum([0] + sizes)
    parts = [np.sort(idx[bounds[i]:bounds[i + 1]]) for i in range(m)]
    return Dataset(dataset.features, dataset.labels, partition=parts, name=dataset.name)


def train_test_split(dataset: Dataset, n_train: int, seed=0):
    N = len(dataset)
    if not 0 < n_train < N:
        raise DatasetError(f"n_train={n_train} must lie strictly between 0 and {N}")
    idx = np.random.default_rng(seed).permutation(N)
    return (dataset.subset(np.sort(idx[:n_train]), name=f"{dataset.name}:train"),
            dataset.subset(np.sort(idx[n_train:]), name=f"{dataset.name}:test"))


def minmax_scale(train: Dataset, *others: Dataset):
    """Scale features to [0, 1] using the ranges seen in ``train``."""
    lo = train.features.min(axis=0)
    span = train.features.max(axis=0) - lo
    span[span == 0] = 1.0
    out = [Dataset((d.features - lo) / span, d.labels, d.partition, d.name)
           for d in (train, *others)]
    return out if others else out[0]


def _map_labels(raw, positive):
    raw = np.asarray(raw, dtype=float)
    if positive is None:
        vals = np.unique(raw)
        if set(vals) <= {-1.0, 1.0}:
            return raw
        raise DatasetError(
            f"labels {vals.tolist()} are not +1/-1; pass the value that maps to +1")
    return np.where(raw == float(positive), 1.0, -1.0)


def load_svmlight(path, positive_label=None, n_features=None, keep_labels=None,
                  name=None) -> Dataset:
    """Read the sparse ``label index:value ...`` text format.

    ``positive_label`` is the raw label mapped to +1; everything else maps
    to -1. ``keep_labels`` optionally restricts to a set of raw labels
    (e.g. ``{1, 7}`` for the MNIST digit pair).
    """
    from sklearn.datasets import load_svmlight_file

    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    X, y = load_svmlight_file(str(path), n_features=n_features)
    X = X.toarray()
    if keep_labels is not None:
        mask = np.isin(y, list(keep_labels))
        X, y = X[mask], y[mask]
    return Dataset(X, _map_labels(y, positive_label), name=name or path.stem)


def load_csv(path, label_column="label", positive_label=None, keep_labels=None,
             name=None) -> Dataset:
    """Read a dense CSV with a header row; ``label_column`` names the target."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"dataset file not found: {path}")
    with open(path) as fh:
        header = [h.strip() for h in fh.readline().split(",")]
    if label_column not in header:
        raise DatasetError(f"{path}: no column named {label_column!r}")
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    col = header.index(label_column)
    y = arr[:, col]
    X = np.delete(arr, col, axis=1)
    if keep_labels is not None:
        mask = np.isin(y, list(keep_labels))
        X, y = X[mask], y[mask]
    return Dataset(X, _map_labels(y, positive_label), name=name or path.stem)


def save_svmlight(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        for row, lab in zip(dataset.features, dataset.labels):
            nz = np.flatnonzero(row)
            toks = " ".join(f"{j + 1}:{row[j]:.17g}" for j in nz)
            fh.write(f"{int(lab):+d} {toks}\n")


# 22 categorical attributes, 112 one-hot columns: the shape of the encoded
# mushroom table, not its actual per-attribute value counts.
MUSHROOM_CARDINALITIES = (5, 4, 10, 2, 9, 2, 2, 2, 10, 2, 4, 4, 4, 9, 9, 1, 4, 3, 5, 8, 6, 7)


def make_categorical_dataset(n_samples, seed=0, cardinalities=MUSHROOM_CARDINALITIES,
                             noise=0.05, name="synthetic-mushroom") -> Dataset:
    """One-hot categorical data with a planted linear labelling rule.

    Stand-in with the mushroom data's shape (112 binary columns, exactly 22
    ones per row) for environments without the real file.
    """
    rng = np.random.default_rng(seed)
    card = np.asarray(cardinalities)
    offsets = np.concatenate([[0], np.cumsum(card)[:-1]])
    n = int(card.sum())
    X = np.zeros((n_samples, n))
    choice = (rng.random((n_samples, card.size)) * card).astype(int)
    X[np.arange(n_samples)[:, None], offsets + choice] = 1.0
    w = rng.normal(size=n)
    score = X @ w
    score -= np.median(score)
    y = np.where(score >= 0, 1.0, -1.0)
    flip = rng.random(n_samples) < noise
    y[flip] *= -1
    return Dataset(X, y, name=name)


def make_gaussian_blobs(n_samples, n_features, seed=0, separation=2.0,
                        name="synthetic-blobs") -> Dataset:
    """Two Gaussian classes; a small dense stand-in for the digit-pair data."""
    rng = np.random.default_rng(seed)
    y = np.where(rng.random(n_samples) < 0.5, 1.0, -1.0)
    direction = rng.normal(size=n_features)
    direction *= separation / np.linalg.norm(direction)
    X = rng.normal(size=(n_samples, n_features)) + 0.5 * y[:, None] * direction
    return Dataset(X, y, name=name)
