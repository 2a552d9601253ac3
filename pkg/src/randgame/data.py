"""Dataset ingestion, normalization, seeded splits, and the 2-D synthetic
generator used for the qualitative desk-scale experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Dataset


class ParseError(ValueError):
    pass


def _parse_label(tok, path, lineno):
    try:
        val = float(tok)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: bad label {tok!r}") from None
    if val not in (-1.0, 1.0):
        raise ParseError(f"{path}:{lineno}: label must be -1 or +1, got {tok!r}")
    return val


def load_dense_csv(path, feature_kind="continuous_unit_interval") -> Dataset:
    """Load 'label,f1,f2,...' lines; labels must be -1 or +1."""
    labels, rows = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split(",")
            labels.append(_parse_label(toks[0], path, lineno))
            try:
                rows.append([float(t) for t in toks[1:]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed feature value") from None
            if len(rows[-1]) != len(rows[0]):
                raise ParseError(f"{path}:{lineno}: inconsistent feature count")
    if not rows:
        raise ParseError(f"{path}: no samples")
    return Dataset(np.array(rows), np.array(labels), feature_kind)


def save_dense_csv(path, data: Dataset) -> None:
    with open(path, "w") as fh:
        for y, row in zip(data.labels, data.features):
            fh.write(f"{int(y):+d}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def load_sparse(path, k: int | None = None) -> Dataset:
    """Load 'label idx:val ...' lines with 1-based indices; absent indices are
    zero and k defaults to the maximum index seen."""
    labels, entries = [], []
    max_idx = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            toks = line.split()
            labels.append(_parse_label(toks[0], path, lineno))
            pairs = []
            for tok in toks[1:]:
                if ":" not in tok:
                    raise ParseError(f"{path}:{lineno}: expected idx:value, got {tok!r}")
                idx_s, _, val_s = tok.partition(":")
                try:
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: malformed idx:value {tok!r}") from None
                if idx < 1:
                    raise ParseError(f"{path}:{lineno}: indices are 1-based")
                max_idx = max(max_idx, idx)
                pairs.append((idx, val))
            entries.append(pairs)
    if not entries:
        raise ParseError(f"{path}: no samples")
    k = k if k is not None else max_idx
    if max_idx > k:
        raise ParseError(f"{path}: index {max_idx} exceeds k override {k}")
    X = np.zeros((len(entries), k))
    for i, pairs in enumerate(entries):
        for idx, val in pairs:
            X[i, idx - 1] = val
    kind = "binary" if np.all(np.isin(X, (0.0, 1.0))) else "continuous_unit_interval"
    return Dataset(X, np.array(labels), kind)


def save_sparse(path, data: Dataset) -> None:
    with open(path, "w") as fh:
        for y, row in zip(data.labels, data.features):
            nz = np.flatnonzero(row)
            pairs = " ".join(f"{j + 1}:{row[j]:.17g}" for j in nz)
            fh.write(f"{int(y):+d} {pairs}".strip() + "\n")


@dataclass(frozen=True)
class Scaler:
    mins: np.ndarray
    ranges: np.ndarray

    def apply(self, data: Dataset, clamp: bool = True) -> Dataset:
        X = (data.features - self.mins) / self.ranges
        if clamp:
            X = np.clip(X, 0.0, 1.0)
        return Dataset(X, data.labels, "continuous_unit_interval")


def normalize_unit_interval(data: Dataset) -> tuple[Dataset, Scaler]:
    """Per-feature min-max scaling to [0, 1]; constant features map to 0.

    Returns the scaled dataset and the scaler for test-set reuse.
    """
    mins = data.features.min(axis=0)
    maxs = data.features.max(axis=0)
    ranges = np.where(maxs > mins, maxs - mins, 1.0)
    scaler = Scaler(mins, ranges)
    return scaler.apply(data, clamp=False), scaler


SYNTH_LEGIT_CENTER = (0.3, 0.3)
SYNTH_STD = 0.08


def synth_2d(n_per_class: int, separation: float, seed: int) -> Dataset:
    """Two isotropic Gaussian blobs in the unit square: legitimate (-1) at
    (0.3, 0.3), malicious (+1) shifted diagonally by the separation."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    legit = rng.normal(SYNTH_LEGIT_CENTER, SYNTH_STD, size=(n_per_class, 2))
    mal_center = (SYNTH_LEGIT_CENTER[0] + separation, SYNTH_LEGIT_CENTER[1] + separation)
    mal = rng.normal(mal_center, SYNTH_STD, size=(n_per_class, 2))
    X = np.clip(np.vstack([legit, mal]), 0.0, 1.0)
    y = np.concatenate([-np.ones(n_per_class), np.ones(n_per_class)])
    return Dataset(X, y)


@dataclass(frozen=True)
class SplitSpec:
    train_n: int
    val_n: int
    test_n: int
    seed: int = 0
    chronological: bool = False

    def __post_init__(self):
        if min(self.train_n, self.val_n, self.test_n) < 1:
            raise ValueError("split sizes must be positive")


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded random (or chronological) train/val/test split."""
    total = spec.train_n + spec.val_n + spec.test_n
    if total > data.n:
        raise ValueError("split sizes exceed dataset size")
    if spec.chronological:
        idx = np.arange(data.n)
    else:
        idx = np.random.default_rng(spec.seed).permutation(data.n)
    parts = (
        idx[: spec.train_n],
        idx[spec.train_n : spec.train_n + spec.val_n],
        idx[spec.train_n + spec.val_n : total],
    )
    return tuple(
        Dataset(data.features[p], data.labels[p], data.feature_kind) for p in parts
    )


@dataclass(frozen=True)
class GridSpec:
    rho_l_grid: tuple
    rho_d_grid: tuple
    W_grid: tuple

    def __post_init__(self):
        for g in (self.rho_l_grid, self.rho_d_grid, self.W_grid):
            if not g or any(v <= 0 for v in g):
                raise ValueError("grids must be non-empty with positive entries")


# Default search grids for model selection.
DEFAULT_GRID = GridSpec(
    rho_l_grid=(0.01, 0.1, 1.0, 10.0, 100.0),
    rho_d_grid=(0.01, 0.05, 0.1, 1.0, 10.0),
    W_grid=(0.01, 0.05, 0.1, 1.0),
)
