"""The implicit exponential family over zero-diagonal binary matrices.

p(Z; theta) = exp(<Z, theta>_F / tau - A(theta)) is sampled by perturb-and-
MAP: Z = MAP(theta + tau * psi) with psi i.i.d. standard logistic.  In the
unconstrained case this is exactly independent Bernoulli(sigmoid(theta/tau))
per entry; under the top-M constraint P&M itself is taken as the definition
of the sampler.
"""

from dataclasses import dataclass

import numpy as np

CLAMP_EPS = 1e-12


@dataclass
class SampleBatch:
    """S perturb-and-MAP draws: z[s] = MAP(theta + tau * psi[s]).

    The noise is retained because I-MLE must reuse the exact same psi for
    its target-parameter MAP calls.
    """
    z: np.ndarray    # (S, d, d) int8
    psi: np.ndarray  # (S, d, d) float64


def _check_theta(theta) -> np.ndarray:
    t = np.asarray(theta, dtype=np.float64)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError(f"theta must be square, got shape {t.shape}")
    if not np.isfinite(t).all():
        raise ValueError("theta entries must be finite")
    if np.diag(t).any():
        raise ValueError("theta diagonal must be zero")
    return t


def map_unconstrained(theta) -> np.ndarray:
    """Entry-wise MAP: 1 iff theta > 0 (strict), diagonal zero."""
    t = _check_theta(theta)
    return (t > 0).astype(np.int8)


def _map_top_m_stack(stack: np.ndarray, m: int) -> np.ndarray:
    """Top-M MAP over a stack of (d, d) real matrices.

    Keeps the index set of the m largest off-diagonal entries, drops any
    that are not positive; ties at the cut break by row-major index order.
    """
    s, d, _ = stack.shape
    nn = d * d
    flat = stack.reshape(s, nn).copy()
    flat[:, :: d + 1] = -np.inf  # diagonal never selectable
    flat[flat <= 0] = -np.inf
    out = np.zeros((s, nn), dtype=np.int8)
    if m > 0:
        if m >= nn:
            out[np.isfinite(flat)] = 1
        else:
            kth = np.partition(flat, nn - m, axis=1)[:, nn - m]
            above = flat > kth[:, None]
            out[above] = 1
            boundary = np.isfinite(kth)[:, None] & (flat == kth[:, None])
            quota = m - above.sum(axis=1)
            rank = np.cumsum(boundary, axis=1)
            out[boundary & (rank <= quota[:, None])] = 1
    return out.reshape(s, d, d)


def map_top_m(theta, m: int) -> np.ndarray:
    """MAP under the max-size constraint: the M largest off-diagonal
    entries, any non-positive ones dropped."""
    t = _check_theta(theta)
    if m < 0:
        raise ValueError("M must be >= 0")
    return _map_top_m_stack(t[None], m)[0]


def sample_logistic_noise(d: int, rng) -> np.ndarray:
    """d x d matrix of i.i.d. standard-logistic entries, zero diagonal."""
    return _noise_stack(1, d, rng)[0]


def _noise_stack(s: int, d: int, rng) -> np.ndarray:
    # inverse CDF log(u/(1-u)), u clamped away from {0, 1}
    u = np.clip(rng.random((s, d, d)), CLAMP_EPS, 1.0 - CLAMP_EPS)
    psi = np.log(u) - np.log1p(-u)
    idx = np.arange(d)
    psi[:, idx, idx] = 0.0
    return psi


def pm_sample(theta, tau: float, s: int, m, rng, noise: str = "logistic") -> SampleBatch:
    """Draw S perturb-and-MAP samples Z = MAP(theta + tau * psi).

    MAP is map_top_m when m is not None, else map_unconstrained.  Only
    logistic noise is implemented; the argument exists so variants stay an
    explicit configuration point.
    """
    t = _check_theta(theta)
    if tau <= 0:
        raise ValueError("tau must be > 0")
    if s < 1:
        raise ValueError("need at least one sample")
    if noise != "logistic":
        raise NotImplementedError(f"noise kind {noise!r}")
    d = t.shape[0]
    psi = _noise_stack(s, d, rng)
    perturbed = t[None] + tau * psi
    if m is None:
        z = (perturbed > 0).astype(np.int8)
        idx = np.arange(d)
        z[:, idx, idx] = 0
    else:
        z = _map_top_m_stack(perturbed, int(m))
    return SampleBatch(z=z, psi=psi)


def log_partition_unconstrained(theta, tau: float) -> float:
    """A(theta) = sum_{i != j} log(1 + exp(theta_ij / tau)), the exact
    normalizer of the unconstrained (independent-entry) family."""
    t = _check_theta(theta)
    if tau <= 0:
        raise ValueError("tau must be > 0")
    vals = np.logaddexp(0.0, t / tau)
    np.fill_diagonal(vals, 0.0)
    return float(vals.sum())
