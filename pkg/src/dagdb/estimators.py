"""Discrete backpropagation from sampled Z back to theta, plus Adam.

Two estimators: the straight-through estimator, which passes sample
gradients through scaled by 1/tau, and I-MLE, which moves theta toward a
target parameter theta - lam * grad and differences the MAP solutions under
the same retained noise.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EstimatorKind:
    kind: str                # "STE" or "IMLE"
    lam: float | None = None  # Domke hyperparameter, required for IMLE

    def __post_init__(self):
        if self.kind not in ("STE", "IMLE"):
            raise ValueError(f"unknown estimator {self.kind!r}")
        if self.kind == "IMLE" and (self.lam is None or self.lam <= 0):
            raise ValueError("IMLE requires lam > 0")


def ste_grad(sample_grads, tau: float, mean_over_samples: bool = False) -> np.ndarray:
    """Straight-through gradient for theta: (1/tau) * sum_s grad_s.

    The literal form is a bare sum over samples; set mean_over_samples to
    divide by S instead (the difference is absorbable into lr_theta).
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    grads = np.asarray(sample_grads, dtype=np.float64)
    if grads.ndim != 3 or grads.shape[0] == 0:
        raise ValueError("need a nonempty stack of sample gradients")
    g = grads.sum(axis=0)
    if mean_over_samples:
        g = g / grads.shape[0]
    g = g / tau
    np.fill_diagonal(g, 0.0)
    return g


def imle_target_param(theta, sample_grad, lam: float) -> np.ndarray:
    """Target parameter theta' = theta - lam * grad, diagonal zero."""
    if lam <= 0:
        raise ValueError("lam must be > 0")
    t = np.asarray(theta, dtype=np.float64) - lam * np.asarray(sample_grad, dtype=np.float64)
    np.fill_diagonal(t, 0.0)
    return t


def imle_grad(theta, samples, sample_grads, lam: float, tau: float, map_fn) -> np.ndarray:
    """I-MLE gradient for theta:

        (1/(lam*tau*S)) * sum_s [MAP(theta + tau*psi_s) - MAP(theta'_s + tau*psi_s)]

    with theta'_s = theta - lam * grad_s and the SAME noise psi_s that
    produced the forward samples.  samples.z already holds the first MAP
    term by construction.  map_fn must be the same solver used forward.
    """
    if lam <= 0 or tau <= 0:
        raise ValueError("lam and tau must be > 0")
    grads = np.asarray(sample_grads, dtype=np.float64)
    s = grads.shape[0] if grads.ndim == 3 else 0
    if s == 0 or samples.z.shape[0] != s:
        raise ValueError("sample count mismatch between noise and gradients")
    theta = np.asarray(theta, dtype=np.float64)
    diff = np.zeros(theta.shape, dtype=np.int64)
    for i in range(s):
        target = imle_target_param(theta, grads[i], lam)
        neg = map_fn(target + tau * samples.psi[i])
        diff += samples.z[i].astype(np.int64) - neg.astype(np.int64)
    g = diff / (lam * tau * s)
    np.fill_diagonal(g, 0.0)
    return g


@dataclass
class AdamState:
    """First/second-moment accumulators for one parameter tensor."""
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, param) -> "AdamState":
        p = np.asarray(param)
        return cls(m=np.zeros_like(p, dtype=np.float64),
                   v=np.zeros_like(p, dtype=np.float64))


def adam_step(state: AdamState, param, grad, lr: float) -> np.ndarray:
    """One bias-corrected Adam update; returns the new parameter.

    Moments update in place.  Square-matrix parameters get their diagonal
    re-zeroed, keeping the no-self-loop constraint structural.
    """
    if lr <= 0:
        raise ValueError("lr must be > 0")
    p = np.asarray(param, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != p.shape or state.m.shape != p.shape:
        raise ValueError("shape mismatch")
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    out = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    if out.ndim == 2 and out.shape[0] == out.shape[1]:
        np.fill_diagonal(out, 0.0)
    return out
