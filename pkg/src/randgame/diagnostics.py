"""Numeric verification of the equilibrium existence/uniqueness machinery.

All curvature quantities here are sampled (finite-difference Hessians at
uniform interior strategy profiles), not certified global bounds. The
uniqueness margin reported is

    (rho_l * lambda_omega_l + lambda_L_l) * (rho_d * lambda_omega_d + lambda_L_d)
    - tau_estimate

with tau the sampled supremum of the largest eigenvalue of R R^T, where R is
the symmetrized cross-block loss Hessian. A positive margin certifies the
sufficient uniqueness condition on the sample only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ops import VIGame


class BoundaryError(ValueError):
    """Evaluation point too close to the feasible-box boundary for central FD."""


def _fd_steps(theta, idx, h_step, lower=None, upper=None):
    """Per-coordinate FD steps, shrunk so theta +- h stays inside the box."""
    h = h_step * (1.0 + np.abs(theta[idx]))
    if lower is not None and upper is not None:
        room = np.minimum(theta[idx] - lower[idx], upper[idx] - theta[idx]) / 2.0
        if np.any(room < 1e-12 * (1.0 + np.abs(theta[idx]))):
            raise BoundaryError("theta too close to the box boundary for central FD")
        h = np.minimum(h, room)
    return h


def fd_hessian_block(f, theta, block_rows, block_cols, h_step=1e-4, lower=None, upper=None):
    """Central-difference second-derivative block of a scalar function.

    Entry (a, b) approximates d^2 f / d theta_rows[a] d theta_cols[b].
    """
    theta = np.asarray(theta, dtype=float)
    rows = np.asarray(block_rows, dtype=int)
    cols = np.asarray(block_cols, dtype=int)
    hr = _fd_steps(theta, rows, h_step, lower, upper)
    hc = _fd_steps(theta, cols, h_step, lower, upper)

    H = np.empty((rows.size, cols.size))
    for a, i in enumerate(rows):
        for b, j in enumerate(cols):
            if i == j:
                h = hr[a]
                tp = theta.copy(); tp[i] += h
                tm = theta.copy(); tm[i] -= h
                H[a, b] = (f(tp) - 2.0 * f(theta) + f(tm)) / (h * h)
            else:
                hi, hj = hr[a], hc[b]
                tpp = theta.copy(); tpp[i] += hi; tpp[j] += hj
                tpm = theta.copy(); tpm[i] += hi; tpm[j] -= hj
                tmp = theta.copy(); tmp[i] -= hi; tmp[j] += hj
                tmm = theta.copy(); tmm[i] -= hi; tmm[j] -= hj
                H[a, b] = (f(tpp) - f(tpm) - f(tmp) + f(tmm)) / (4.0 * hi * hj)
    return H


def _blocks(ops: VIGame):
    idx_l = np.arange(ops.dim_l)
    idx_d = np.arange(ops.dim_l, ops.dim)
    return idx_l, idx_d


def pseudo_jacobian_min_eig(ops: VIGame, theta, h_step=1e-4) -> float:
    """Min eigenvalue of the symmetric part of the assembled pseudo-Jacobian."""
    idx_l, idx_d = _blocks(ops)
    r_l, r_d = ops.r
    J_ll = r_l * fd_hessian_block(ops.cost_l, theta, idx_l, idx_l, h_step, ops.lower, ops.upper)
    J_ld = r_l * fd_hessian_block(ops.cost_l, theta, idx_l, idx_d, h_step, ops.lower, ops.upper)
    J_dl = r_d * fd_hessian_block(ops.cost_d, theta, idx_d, idx_l, h_step, ops.lower, ops.upper)
    J_dd = r_d * fd_hessian_block(ops.cost_d, theta, idx_d, idx_d, h_step, ops.lower, ops.upper)
    J = np.block([[J_ll, J_ld], [J_dl, J_dd]])
    return float(np.linalg.eigvalsh(0.5 * (J + J.T)).min())


@dataclass(frozen=True)
class DiagnosticsReport:
    lambda_omega_l: float
    lambda_omega_d: float
    lambda_L_l: float
    lambda_L_d: float
    tau_estimate: float
    uniqueness_margin: float
    min_jacobian_eig: tuple
    monotone_violations: int
    rho_l: float
    rho_d: float

    def as_text(self) -> str:
        lines = [
            f"lambda_omega_l={self.lambda_omega_l:.6g}",
            f"lambda_omega_d={self.lambda_omega_d:.6g}",
            f"lambda_L_l_sampled={self.lambda_L_l:.6g}",
            f"lambda_L_d_sampled={self.lambda_L_d:.6g}",
            f"tau_sampled={self.tau_estimate:.6g}",
            f"uniqueness_margin={self.uniqueness_margin:.6g}",
            f"monotone_violations={self.monotone_violations}",
        ]
        return "\n".join(lines)


def _interior_sample(ops: VIGame, rng: np.random.Generator) -> np.ndarray:
    width = ops.upper - ops.lower
    u = rng.uniform(0.1, 0.9, size=ops.dim)
    return ops.lower + u * width


def monotonicity_sample(ops: VIGame, n_pairs: int, seed: int = 0, tol: float = 1e-12) -> int:
    """Count violations of (g(a) - g(b)) . (a - b) >= -tol over random pairs."""
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(n_pairs):
        a = _interior_sample(ops, rng)
        b = _interior_sample(ops, rng)
        inner = float((ops.pseudo_grad(a) - ops.pseudo_grad(b)) @ (a - b))
        if inner < -tol:
            violations += 1
    return violations


def uniqueness_margin(
    ops: VIGame,
    n_profiles: int = 20,
    seed: int = 0,
    h_step: float = 1e-4,
    n_pairs: int | None = None,
    jacobian_eigs: bool = True,
) -> DiagnosticsReport:
    """Estimate the sufficient-condition margin on sampled interior profiles."""
    if ops.loss_l is None or ops.loss_d is None or ops.reg_hess_l is None or ops.reg_hess_d is None:
        raise ValueError("operator lacks the loss/regularizer split needed here")
    rng = np.random.default_rng(seed)
    idx_l, idx_d = _blocks(ops)
    rho_l, rho_d = ops.rho

    lam_omega_l = float(np.min(ops.reg_hess_l))
    lam_omega_d = float(np.min(ops.reg_hess_d))

    lam_L_l = np.inf
    lam_L_d = np.inf
    tau = -np.inf
    eigs = []
    for _ in range(n_profiles):
        theta = _interior_sample(ops, rng)
        H_ll = fd_hessian_block(ops.loss_l, theta, idx_l, idx_l, h_step, ops.lower, ops.upper)
        H_dd = fd_hessian_block(ops.loss_d, theta, idx_d, idx_d, h_step, ops.lower, ops.upper)
        lam_L_l = min(lam_L_l, float(np.linalg.eigvalsh(0.5 * (H_ll + H_ll.T)).min()))
        lam_L_d = min(lam_L_d, float(np.linalg.eigvalsh(0.5 * (H_dd + H_dd.T)).min()))
        H_ld = fd_hessian_block(ops.loss_l, theta, idx_l, idx_d, h_step, ops.lower, ops.upper)
        H_dl = fd_hessian_block(ops.loss_d, theta, idx_d, idx_l, h_step, ops.lower, ops.upper)
        R = 0.5 * (H_ld.T + H_dl)
        tau = max(tau, float(np.linalg.eigvalsh(R @ R.T).max()))
        if jacobian_eigs:
            eigs.append(pseudo_jacobian_min_eig(ops, theta, h_step))

    margin = (rho_l * lam_omega_l + lam_L_l) * (rho_d * lam_omega_d + lam_L_d) - tau
    violations = monotonicity_sample(ops, n_pairs if n_pairs is not None else n_profiles, seed + 1)
    return DiagnosticsReport(
        lambda_omega_l=lam_omega_l,
        lambda_omega_d=lam_omega_d,
        lambda_L_l=lam_L_l,
        lambda_L_d=lam_L_d,
        tau_estimate=tau,
        uniqueness_margin=float(margin),
        min_jacobian_eig=tuple(eigs),
        monotone_violations=violations,
        rho_l=rho_l,
        rho_d=rho_d,
    )
