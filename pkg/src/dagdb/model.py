"""Forward model, loss, and analytic gradients.

A data point x flows through the sampled digraph as x_tilde_j =
sum_i x_i Phi_ij Z_ij, so each node is predicted from its parents alone.
The loss is mean-squared error plus an acyclicity penalty
(tr(exp Z) - d)^2 and an edge-count penalty, with closed-form gradients in
Z (relaxed to real entries) and Phi.
"""

from dataclasses import dataclass

import numpy as np

from dagdb import kernels


@dataclass
class RegCoeffs:
    rho_dag: float = 0.0
    rho_sp: float = 0.0

    def __post_init__(self):
        if self.rho_dag < 0 or self.rho_sp < 0:
            raise ValueError("regularizer coefficients must be >= 0")


@dataclass
class LossBreakdown:
    mse: float
    dag_reg: float
    sp_reg: float
    total: float


def graphify(x, z) -> np.ndarray:
    """(x <> Z)_ij = x_i * Z_ij: broadcast the point down the edges."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z)
    if x.shape != (z.shape[0],):
        raise ValueError(f"x has shape {x.shape}, expected ({z.shape[0]},)")
    return x[:, None] * z


def predict(x, z, phi) -> np.ndarray:
    """x_tilde_j = sum_i x_i Phi_ij Z_ij."""
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != z.shape or x.shape != (z.shape[0],):
        raise ValueError("dimension mismatch")
    return x @ (phi * z)


def mse(x, x_tilde) -> float:
    x = np.asarray(x, dtype=np.float64)
    x_tilde = np.asarray(x_tilde, dtype=np.float64)
    if x.shape != x_tilde.shape:
        raise ValueError("dimension mismatch")
    return float(np.mean((x - x_tilde) ** 2))


def dag_reg(a) -> float:
    """(tr(exp A) - d)^2; zero exactly on DAG adjacencies.

    Accepts real-valued A so finite-difference checks can probe it.
    """
    a = np.asarray(a, dtype=np.float64)
    tr, _ = kernels.expm_trace(a)
    return float((tr - a.shape[0]) ** 2)


def sparsity_reg(z) -> float:
    """Sum of entries (edge count for binary Z)."""
    return float(np.asarray(z, dtype=np.float64).sum())


def _check_batch(x_batch, z, phi):
    xb = np.asarray(x_batch, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if xb.ndim != 2 or xb.shape[0] == 0:
        raise ValueError("batch must be a nonempty n x d matrix")
    d = xb.shape[1]
    if z.shape != (d, d) or phi.shape != (d, d):
        raise ValueError("dimension mismatch")
    return xb, z, phi


def loss_batch(x_batch, z, phi, rho: RegCoeffs) -> LossBreakdown:
    """Mean over the batch of per-point MSE, plus the regularizers once."""
    xb, z, phi = _check_batch(x_batch, z, phi)
    pred = xb @ (phi * z)
    mse_val = float(np.mean((xb - pred) ** 2))
    dag_val = dag_reg(z)
    sp_val = sparsity_reg(z)
    total = mse_val + rho.rho_dag * dag_val + rho.rho_sp * sp_val
    return LossBreakdown(mse=mse_val, dag_reg=dag_val, sp_reg=sp_val, total=total)


def grad_z(x_batch, z, phi, rho: RegCoeffs) -> np.ndarray:
    """d loss_batch / d Z_ij at Z relaxed to real entries, diagonal zeroed."""
    xb, z, phi = _check_batch(x_batch, z, phi)
    b, d = xb.shape
    resid = xb - xb @ (phi * z)
    g = (-2.0 / (d * b)) * (xb.T @ resid) * phi
    if rho.rho_dag:
        tr, ez = kernels.expm_trace(z)
        g = g + rho.rho_dag * 2.0 * (tr - d) * ez.T
    if rho.rho_sp:
        g = g + rho.rho_sp
    np.fill_diagonal(g, 0.0)
    return g


def grad_phi(x_batch, z, phi) -> np.ndarray:
    """d loss_batch / d Phi_ij, diagonal zeroed."""
    xb, z, phi = _check_batch(x_batch, z, phi)
    b, d = xb.shape
    resid = xb - xb @ (phi * z)
    g = (-2.0 / (d * b)) * (xb.T @ resid) * z
    np.fill_diagonal(g, 0.0)
    return g
