"""End-to-end training (Fig-1-style loop) and final DAG prediction.

Per batch: draw S perturb-and-MAP samples (shared across the batch's data
points), compute per-sample losses and gradients, push a theta gradient
through the chosen discrete estimator and an averaged phi gradient through
standard backprop, and update both with Adam.  Prediction solves the
maximum-DAG problem on the MAP digraph with theta as edge weights.
"""

import math
from dataclasses import dataclass, asdict, replace
from typing import Optional

import numpy as np

from dagdb import estimators, kernels, maxdag, model, sampling


@dataclass
class TrainConfig:
    """All hyperparameters of a run.  Defaults are the STE_84 preset.

    Serializes to a flat JSON object with exactly these field names; lam is
    the Domke hyperparameter (IMLE only), M the optional max edge count of
    the constrained MAP solver, and max_size_scale the documented ratio for
    resolving an automatic M from an expected edge count (84 over the 60
    expected edges of the reference ER2 d=30 setting is 1.4).
    """
    n: int = 1000
    epochs: int = 1000
    shuffle: bool = True
    batch_size: int = 16
    estimator: str = "STE"
    lam: Optional[float] = None
    S: int = 10
    tau: float = 1.771e-1
    theta_init_width: float = 2.169e-1
    lr_theta: float = 1.134e-4
    lr_phi: float = 1.232e-2
    rho_dag: float = 4.101e-1
    rho_sp: float = 1.023e-2
    M: Optional[int] = 84
    max_size_scale: float = 1.4
    ste_mean_over_samples: bool = False
    train_with_dag: bool = False
    seed: int = 0

    def __post_init__(self):
        estimators.EstimatorKind(self.estimator, self.lam)
        model.RegCoeffs(self.rho_dag, self.rho_sp)
        if self.epochs < 1 or self.batch_size < 1 or self.S < 1:
            raise ValueError("epochs, batch_size and S must be >= 1")
        if self.tau <= 0 or self.lr_theta <= 0 or self.lr_phi <= 0:
            raise ValueError("tau and learning rates must be > 0")
        if self.theta_init_width < 0:
            raise ValueError("theta_init_width must be >= 0")
        if self.M is not None and self.M < 0:
            raise ValueError("M must be None or >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(payload) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**payload)


PRESETS = {
    "STE_84": TrainConfig(
        n=1000, epochs=1000, shuffle=True, batch_size=16, estimator="STE",
        lam=None, S=10, tau=1.771e-1, theta_init_width=2.169e-1,
        lr_theta=1.134e-4, lr_phi=1.232e-2, rho_dag=4.101e-1,
        rho_sp=1.023e-2, M=84),
    "IMLE_None": TrainConfig(
        n=1000, epochs=1000, shuffle=True, batch_size=8, estimator="IMLE",
        lam=2.714e1, S=47, tau=8.786e-1, theta_init_width=1.137e-4,
        lr_theta=1.616e-3, lr_phi=3.720e-1, rho_dag=1.575e-1,
        rho_sp=1.208e-3, M=None),
}


def preset(name: str) -> TrainConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    return replace(PRESETS[name])


@dataclass
class TrainResult:
    theta: np.ndarray
    phi: np.ndarray
    history: list
    predicted_dag: np.ndarray


class DivergenceError(RuntimeError):
    """Raised when the loss goes non-finite; carries the failing step."""

    def __init__(self, epoch: int, batch_index: int, loss: model.LossBreakdown):
        self.epoch = epoch
        self.batch_index = batch_index
        self.loss = loss
        super().__init__(
            f"non-finite loss at epoch {epoch}, batch {batch_index}: {loss}")


def batch_iterator(n: int, batch_size: int, shuffle: bool, epoch_seed=None):
    """Partition [0, n) into ceil(n / batch_size) index batches."""
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.arange(n)
    if shuffle:
        idx = np.random.default_rng(epoch_seed).permutation(n)
    return [idx[i:i + batch_size] for i in range(0, n, batch_size)]


def predict_dag(theta, cfg: TrainConfig) -> np.ndarray:
    """MAP digraph (top-M if configured), then GFAS with theta as weights."""
    if cfg.M is not None:
        z_star = sampling.map_top_m(theta, cfg.M)
    else:
        z_star = sampling.map_unconstrained(theta)
    return maxdag.gfas_max_dag(z_star, theta).dag


def train(x, cfg: TrainConfig) -> TrainResult:
    """Run the training loop on an n x d data matrix.

    The data size actually used is x's row count (cfg.n records the preset's
    intended synthetic size).  The acyclicity penalty value is evaluated
    only when rho_dag is nonzero; ablated runs record 0.0 for that field.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be an n x d matrix")
    if not np.isfinite(x).all():
        raise ValueError("data must be finite")
    n, d = x.shape
    if n < cfg.batch_size:
        raise ValueError("need n >= batch_size")

    est = estimators.EstimatorKind(cfg.estimator, cfg.lam)
    rho = model.RegCoeffs(cfg.rho_dag, cfg.rho_sp)
    if cfg.M is None:
        map_fn = sampling.map_unconstrained
    else:
        def map_fn(t):
            return sampling.map_top_m(t, cfg.M)

    rng = np.random.default_rng(cfg.seed)
    w = cfg.theta_init_width
    theta = rng.uniform(-w, w, size=(d, d))
    np.fill_diagonal(theta, 0.0)
    lim = 1.0 / math.sqrt(d)
    phi = rng.uniform(-lim, lim, size=(d, d))
    np.fill_diagonal(phi, 0.0)
    adam_theta = estimators.AdamState.like(theta)
    adam_phi = estimators.AdamState.like(phi)

    diag = np.arange(d)
    history = []
    for epoch in range(cfg.epochs):
        batches = batch_iterator(n, cfg.batch_size, cfg.shuffle,
                                 epoch_seed=[cfg.seed, epoch])
        sums = np.zeros(4)
        for bi, batch in enumerate(batches):
            xb = x[batch]
            b = xb.shape[0]
            sb = sampling.pm_sample(theta, cfg.tau, cfg.S, cfg.M, rng)
            zs = sb.z
            if cfg.train_with_dag:
                zs = np.stack([maxdag.gfas_max_dag(z, theta).dag for z in zs])
            zf = zs.astype(np.float64)

            with np.errstate(over="ignore", invalid="ignore"):
                preds = np.matmul(xb[None], phi[None] * zf)
                resid = xb[None] - preds
                mse_s = np.mean(resid ** 2, axis=(1, 2))
            if rho.rho_dag:
                trs, ezs = kernels.expm_trace(zf)
                dag_s = (trs - d) ** 2
            else:
                trs = ezs = None
                dag_s = np.zeros(cfg.S)
            sp_s = zf.sum(axis=(1, 2))
            tot_s = mse_s + rho.rho_dag * dag_s + rho.rho_sp * sp_s
            if not np.isfinite(tot_s).all():
                bad = int(np.flatnonzero(~np.isfinite(tot_s))[0])
                raise DivergenceError(epoch, bi, model.LossBreakdown(
                    mse=float(mse_s[bad]), dag_reg=float(dag_s[bad]),
                    sp_reg=float(sp_s[bad]), total=float(tot_s[bad])))

            xtr = np.matmul(xb.T[None], resid)
            coef = -2.0 / (d * b)
            gz = coef * xtr * phi[None]
            if rho.rho_dag:
                gz += (rho.rho_dag * 2.0 * (trs - d))[:, None, None] \
                    * np.swapaxes(ezs, 1, 2)
            if rho.rho_sp:
                gz += rho.rho_sp
            gz[:, diag, diag] = 0.0
            gphi = (coef * xtr * zf).mean(axis=0)
            np.fill_diagonal(gphi, 0.0)

            if est.kind == "STE":
                tg = estimators.ste_grad(gz, cfg.tau, cfg.ste_mean_over_samples)
            else:
                tg = estimators.imle_grad(theta, sb, gz, cfg.lam, cfg.tau, map_fn)
            theta = estimators.adam_step(adam_theta, theta, tg, cfg.lr_theta)
            phi = estimators.adam_step(adam_phi, phi, gphi, cfg.lr_phi)
            sums += (mse_s.mean(), dag_s.mean(), sp_s.mean(), tot_s.mean())
        sums /= len(batches)
        history.append(model.LossBreakdown(*map(float, sums)))

    return TrainResult(theta=theta, phi=phi, history=history,
                       predicted_dag=predict_dag(theta, cfg))
