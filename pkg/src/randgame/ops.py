"""Generic two-player game operator over a flattened parameter vector.

The extragradient solver and the diagnostics work on this interface only, so
toy games used in tests and the primal/dual SVM games share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class VIGame:
    """Variational-inequality view of a two-player game.

    cost_l/cost_d evaluate the full player costs at a joint flat vector;
    pseudo_grad stacks the r-weighted own-block gradients. loss_* and
    reg_hess_* (the constant diagonal Hessians of the expected regularizers,
    without their rho weights) are optional and only needed by diagnostics.
    """

    dim_l: int
    dim_d: int
    lower: np.ndarray
    upper: np.ndarray
    cost_l: Callable[[np.ndarray], float]
    cost_d: Callable[[np.ndarray], float]
    pseudo_grad: Callable[[np.ndarray], np.ndarray]
    r: tuple[float, float] = (1.0, 1.0)
    rho: tuple[float, float] = (1.0, 1.0)
    loss_l: Optional[Callable[[np.ndarray], float]] = None
    loss_d: Optional[Callable[[np.ndarray], float]] = None
    reg_hess_l: Optional[np.ndarray] = None
    reg_hess_d: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.dim_l + self.dim_d

    def project(self, theta: np.ndarray) -> np.ndarray:
        return np.clip(theta, self.lower, self.upper)

    def split(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return theta[: self.dim_l], theta[self.dim_l :]
