"""Core data model: datasets, Gaussian strategy parameters, feasible boxes.

All types are immutable after construction; the free functions are pure.
The flattened joint parameter layout is fixed as

    [mu_w (k+1) ; sigma_w (k+1) ; mu_x_1 (k) ; sigma_x_1 (k) ; ... ; sigma_x_n (k)]

with the last coordinate of each learner block belonging to the bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEATURE_KINDS = ("continuous_unit_interval", "binary")

# Default feasible intervals for the deviation coordinates (learner / attacker).
LEARNER_DEV_BOUNDS = (1e-6, 1e-3)
ATTACKER_DEV_BOUNDS = (1e-3, 0.5)


class ShapeError(ValueError):
    """Dimension mismatch between parameter objects."""


def _as_float_array(x, ndim):
    a = np.asarray(x, dtype=float)
    if a.ndim != ndim:
        raise ShapeError(f"expected {ndim}-d array, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Dataset:
    """Training/test set with labels in {-1,+1}."""

    features: np.ndarray
    labels: np.ndarray
    feature_kind: str = "continuous_unit_interval"

    def __post_init__(self):
        X = _as_float_array(self.features, 2)
        y = _as_float_array(self.labels, 1)
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ShapeError("dataset needs n >= 1 samples and k >= 1 features")
        if y.shape[0] != X.shape[0]:
            raise ShapeError("labels length does not match feature rows")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if self.feature_kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature_kind {self.feature_kind!r}")
        if self.feature_kind == "binary" and not np.all(np.isin(X, (0.0, 1.0))):
            raise ValueError("binary dataset contains non-binary values")
        if self.feature_kind == "continuous_unit_interval" and (
            X.min() < 0.0 or X.max() > 1.0
        ):
            raise ValueError("continuous features must lie in [0, 1]")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def k(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class LearnerParams:
    """Gaussian strategy of the learner: mean/deviation of w = [w_tilde; b]."""

    mu_w: np.ndarray
    sigma_w: np.ndarray

    def __post_init__(self):
        mu = _as_float_array(self.mu_w, 1)
        sig = _as_float_array(self.sigma_w, 1)
        if mu.shape != sig.shape:
            raise ShapeError("mu_w and sigma_w must have equal length")
        if mu.shape[0] < 2:
            raise ShapeError("learner needs at least one feature plus bias")
        if np.any(sig <= 0):
            raise ValueError("sigma_w must be strictly positive")
        mu.setflags(write=False)
        sig.setflags(write=False)
        object.__setattr__(self, "mu_w", mu)
        object.__setattr__(self, "sigma_w", sig)

    @property
    def k(self) -> int:
        return self.mu_w.shape[0] - 1

    @property
    def mu_tilde(self) -> np.ndarray:
        return self.mu_w[:-1]

    @property
    def mu_b(self) -> float:
        return float(self.mu_w[-1])

    @property
    def sigma_tilde(self) -> np.ndarray:
        return self.sigma_w[:-1]

    @property
    def sigma_b(self) -> float:
        return float(self.sigma_w[-1])


@dataclass(frozen=True)
class AttackerParams:
    """Per-sample Gaussian strategies of the data generator, stored row-wise."""

    mu_x: np.ndarray
    sigma_x: np.ndarray

    def __post_init__(self):
        mu = _as_float_array(self.mu_x, 2)
        sig = _as_float_array(self.sigma_x, 2)
        if mu.shape != sig.shape:
            raise ShapeError("mu_x and sigma_x must have equal shape")
        if mu.shape[0] < 1 or mu.shape[1] < 1:
            raise ShapeError("attacker needs n >= 1 samples and k >= 1 features")
        if np.any(sig <= 0):
            raise ValueError("sigma_x must be strictly positive")
        mu.setflags(write=False)
        sig.setflags(write=False)
        object.__setattr__(self, "mu_x", mu)
        object.__setattr__(self, "sigma_x", sig)

    @property
    def n(self) -> int:
        return self.mu_x.shape[0]

    @property
    def k(self) -> int:
        return self.mu_x.shape[1]


@dataclass(frozen=True)
class ParamBox:
    """Axis-aligned feasible box for a flattened parameter block."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_float_array(self.lower, 1)
        up = _as_float_array(self.upper, 1)
        if lo.shape != up.shape:
            raise ShapeError("box bounds must have equal length")
        if np.any(lo > up):
            raise ValueError("box lower bound exceeds upper bound")
        lo.setflags(write=False)
        up.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]


def project_box(v, box: ParamBox) -> np.ndarray:
    """Euclidean projection (coordinate-wise clamp) onto an axis-aligned box."""
    v = _as_float_array(v, 1)
    if v.shape[0] != box.dim:
        raise ShapeError(f"vector dim {v.shape[0]} != box dim {box.dim}")
    return np.clip(v, box.lower, box.upper)


def default_boxes(n: int, k: int, W: float) -> tuple[ParamBox, ParamBox]:
    """Default feasible boxes: learner means in [-W, W], attacker means in [0, 1],
    deviation coordinates in the standard intervals above."""
    if W <= 0:
        raise ValueError("W must be positive")
    if n < 1 or k < 1:
        raise ShapeError("need n >= 1 and k >= 1")
    m = k + 1
    l_lo = np.concatenate([np.full(m, -W), np.full(m, LEARNER_DEV_BOUNDS[0])])
    l_up = np.concatenate([np.full(m, W), np.full(m, LEARNER_DEV_BOUNDS[1])])
    a_lo = np.tile(
        np.concatenate([np.zeros(k), np.full(k, ATTACKER_DEV_BOUNDS[0])]), n
    )
    a_up = np.tile(
        np.concatenate([np.ones(k), np.full(k, ATTACKER_DEV_BOUNDS[1])]), n
    )
    return ParamBox(l_lo, l_up), ParamBox(a_lo, a_up)


@dataclass(frozen=True)
class GameSpec:
    """A full game instance: dataset, trade-off weights and feasible boxes.

    bias_reg adds (bias_reg/2) * b^2 to the learner's objective; the default 0
    keeps the plain unregularized-bias C-SVM learner.
    """

    dataset: Dataset
    rho_l: float
    rho_d: float
    learner_box: ParamBox
    attacker_box: ParamBox
    bias_reg: float = 0.0

    def __post_init__(self):
        if self.rho_l <= 0 or self.rho_d <= 0:
            raise ValueError("rho_l and rho_d must be positive")
        if self.bias_reg < 0:
            raise ValueError("bias_reg must be non-negative")
        n, k = self.dataset.n, self.dataset.k
        if self.learner_box.dim != 2 * (k + 1):
            raise ShapeError("learner box dim must be 2*(k+1)")
        if self.attacker_box.dim != 2 * n * k:
            raise ShapeError("attacker box dim must be 2*n*k")
        # Deviation coordinates must be bounded away from zero (compact strategy
        # sets with sigma > 0). Learner deviations are the trailing k+1 coords,
        # attacker deviations the trailing k of each per-sample block.
        m = k + 1
        if np.any(self.learner_box.lower[m:] <= 0):
            raise ValueError("learner deviation lower bounds must be positive")
        a_lo = self.attacker_box.lower.reshape(n, 2 * k)
        if np.any(a_lo[:, k:] <= 0):
            raise ValueError("attacker deviation lower bounds must be positive")

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def k(self) -> int:
        return self.dataset.k

    @property
    def dim_l(self) -> int:
        return 2 * (self.k + 1)

    @property
    def dim_d(self) -> int:
        return 2 * self.n * self.k


def flatten(theta_l: LearnerParams, theta_d: AttackerParams) -> np.ndarray:
    """Concatenate both players' parameters in the fixed joint layout."""
    if theta_l.k != theta_d.k:
        raise ShapeError("learner and attacker feature dims differ")
    attacker_blocks = np.hstack([theta_d.mu_x, theta_d.sigma_x]).ravel()
    return np.concatenate([theta_l.mu_w, theta_l.sigma_w, attacker_blocks])


def unflatten(v, n: int, k: int) -> tuple[LearnerParams, AttackerParams]:
    """Inverse of :func:`flatten` for known dataset dimensions."""
    v = _as_float_array(v, 1)
    m = k + 1
    if v.shape[0] != 2 * m + 2 * n * k:
        raise ShapeError(
            f"vector length {v.shape[0]} inconsistent with n={n}, k={k}"
        )
    theta_l = LearnerParams(v[:m].copy(), v[m : 2 * m].copy())
    blocks = v[2 * m :].reshape(n, 2 * k)
    theta_d = AttackerParams(blocks[:, :k].copy(), blocks[:, k:].copy())
    return theta_l, theta_d


def split_flat(v, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Split a joint flat vector into its learner and attacker blocks."""
    v = _as_float_array(v, 1)
    m = 2 * (k + 1)
    if v.shape[0] != m + 2 * n * k:
        raise ShapeError("flat vector length inconsistent with n, k")
    return v[:m], v[m:]


# --- serialization ----------------------------------------------------------

def save_flat_csv(path, v) -> None:
    """Write a parameter vector as one CSV line in the flattening order."""
    v = _as_float_array(v, 1)
    with open(path, "w") as fh:
        fh.write(",".join(f"{x:.17g}" for x in v) + "\n")


def load_flat_csv(path) -> np.ndarray:
    with open(path) as fh:
        line = fh.readline().strip()
    if not line:
        raise ValueError(f"{path}: empty parameter file")
    return np.array([float(tok) for tok in line.split(",")], dtype=float)


def load_config(path) -> dict:
    """Read a plain key=value config file; values parsed as floats when possible."""
    cfg: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            try:
                cfg[key] = float(val)
            except ValueError:
                cfg[key] = val
    return cfg


def save_config(path, cfg: dict) -> None:
    with open(path, "w") as fh:
        for key, val in cfg.items():
            fh.write(f"{key}={val}\n")
