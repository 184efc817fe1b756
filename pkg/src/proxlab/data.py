"""Desk-scale datasets: seeded Gaussian blobs and numeric CSV files."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

__all__ = ["Dataset", "batches", "gen_blobs", "load_csv", "stratified_split"]

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    split: np.ndarray
    num_classes: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DataError("features must be n x p with one label per row")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DataError("labels must lie in [0, num_classes)")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain NaN or Inf")

    def subset(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        sel = self.split == name
        return self.features[sel], self.labels[sel]

    def __len__(self):
        return self.labels.size


def stratified_split(labels: np.ndarray, rng: np.random.Generator, fractions=(0.8, 0.1)) -> np.ndarray:
    """Tag each row train/val/test, per class, in the given proportions."""
    split = np.empty(labels.size, dtype="<U5")
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        n_train = int(round(fractions[0] * idx.size))
        n_val = int(round(fractions[1] * idx.size))
        split[idx[:n_train]] = "train"
        split[idx[n_train : n_train + n_val]] = "val"
        split[idx[n_train + n_val :]] = "test"
    return split


def _standardize(x: np.ndarray, split: np.ndarray) -> np.ndarray:
    train = x[split == "train"]
    if train.shape[0] == 0:
        return x
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd[sd == 0] = 1.0
    return (x - mu) / sd


def gen_blobs(
    seed: int,
    n: int,
    classes: int = 2,
    dim: int = 2,
    spread: float = 1.0,
    separation: float = 3.0,
    standardize: bool = True,
) -> Dataset:
    """Isotropic Gaussian clusters with a stratified 80/10/10 split.

    Class centers are drawn once per seed with scale ``separation``; points
    scatter around them with standard deviation ``spread``.
    """
    if classes < 2 or n < classes:
        raise DataError(f"need n >= classes >= 2, got n={n}, classes={classes}")
    if dim < 1 or spread < 0:
        raise DataError("dim must be >= 1 and spread >= 0")
    rng = np.random.default_rng(seed)
    centers = rng.normal(0.0, separation, size=(classes, dim))
    labels = rng.permutation(np.arange(n) % classes)
    x = centers[labels] + spread * rng.normal(size=(n, dim))
    split = stratified_split(labels, rng)
    if standardize:
        x = _standardize(x, split)
    prov = {"generator": "blobs", "seed": seed, "n": n, "classes": classes, "dim": dim,
            "spread": spread, "separation": separation}
    return Dataset(x, labels.astype(int), split, classes, prov)


def load_csv(path, label_column: str, seed: int = 0, standardize: bool = True) -> Dataset:
    """Read a numeric CSV with a header row.

    A column named ``split`` (train/val/test), if present, assigns rows to
    splits; otherwise a seeded stratified 80/10/10 split is drawn.
    """
    path = Path(path)
    raw = path.read_bytes()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header {header}")
        li = header.index(label_column)
        si = header.index("split") if "split" in header else None
        feat_cols = [i for i in range(len(header)) if i not in (li, si)]
        rows, labels, splits = [], [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            vals = []
            for i in feat_cols:
                try:
                    vals.append(float(row[i]))
                except ValueError:
                    raise DataError(f"{path}:{line}: non-numeric value {row[i]!r} in column {header[i]!r}") from None
            try:
                lab = float(row[li])
            except ValueError:
                raise DataError(f"{path}:{line}: non-numeric label {row[li]!r}") from None
            if lab != int(lab) or lab < 0:
                raise DataError(f"{path}:{line}: label must be a nonnegative integer, got {row[li]!r}")
            if si is not None:
                tag = row[si].strip()
                if tag not in SPLITS:
                    raise DataError(f"{path}:{line}: unknown split {tag!r}")
                splits.append(tag)
            rows.append(vals)
            labels.append(int(lab))
    if not rows:
        raise DataError(f"{path}: no data rows")
    x = np.array(rows, dtype=float).reshape(len(rows), len(feat_cols))
    y = np.array(labels, dtype=int)
    split = np.array(splits, dtype="<U5") if si is not None else stratified_split(y, np.random.default_rng(seed))
    if standardize:
        x = _standardize(x, split)
    prov = {"path": str(path), "sha256": hashlib.sha256(raw.replace(b"\r\n", b"\n")).hexdigest()}
    return Dataset(x, y, split, int(y.max()) + 1, prov)


def batches(n: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    """Seeded minibatch index arrays covering ``range(n)`` once.

    ``n`` may also be a Dataset, in which case its train split is used.
    """
    if isinstance(n, Dataset):
        n = int(np.sum(n.split == "train"))
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    perm = np.random.default_rng([seed, epoch]).permutation(n)
    return [perm[i : i + batch_size] for i in range(0, n, batch_size)]
