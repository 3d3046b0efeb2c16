"""Pure NumPy/Python reference kernels.

These mirror the compiled versions in ``_fast.pyx`` operation for operation
(same scaling exponents, same Taylor term count, same tie rules) so both
backends are interchangeable.  The compiled module is preferred at import
time; this one is the fallback and the readable reference.
"""

import numpy as np

TAYLOR_TERMS = 14
SCALE_LIMIT = 0.5


def expm_trace(mats):
    """Matrix exponential of each matrix in a stack, via scaling-and-squaring
    with a truncated Taylor series.

    mats: (d, d) or (S, d, d) float array.
    Returns (trace, expm): scalars/(d, d) for a single matrix, (S,)/(S, d, d)
    for a stack.  Relative accuracy is ~1e-13 for the inf-norms that arise
    from binary adjacency matrices.
    """
    arr = np.ascontiguousarray(mats, dtype=np.float64)
    single = arr.ndim == 2
    if single:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError(f"expected square matrices, got shape {mats.shape}")
    n, d, _ = arr.shape

    # per-matrix scaling exponent: smallest s with norm_inf / 2^s <= 0.5
    norms = np.abs(arr).sum(axis=2).max(axis=1) if d else np.zeros(n)
    s = np.zeros(n, dtype=np.int64)
    t = norms.copy()
    while True:
        big = t > SCALE_LIMIT
        if not big.any():
            break
        t[big] *= 0.5
        s[big] += 1

    scaled = arr * np.ldexp(1.0, -s)[:, None, None]
    eye = np.eye(d)
    expm = eye + scaled
    term = scaled.copy()
    for k in range(2, TAYLOR_TERMS + 1):
        term = np.matmul(term, scaled) * (1.0 / k)
        expm += term

    for r in range(int(s.max(initial=0))):
        live = r < s
        expm[live] = np.matmul(expm[live], expm[live])

    # sequential diagonal accumulation (numpy's pairwise trace reassociates)
    traces = np.zeros(n)
    for i in range(d):
        traces += expm[:, i, i]
    if single:
        return float(traces[0]), expm[0]
    return traces, expm


def gfas_order(adj, weights):
    """Greedy feedback-arc-set node ordering (weighted Eades-Lin-Smyth).

    Repeatedly strips sinks to the tail and sources to the head; when neither
    exists, removes the remaining node with the largest (out-weight minus
    in-weight), appending it to the head.  Weights are consulted only on
    edges present in ``adj``.  Ties and scan order are by smallest node
    index, which makes the result deterministic.
    """
    adj = np.asarray(adj)
    w = np.asarray(weights, dtype=np.float64)
    d = adj.shape[0]
    alive = [True] * d
    out_deg = [0] * d
    in_deg = [0] * d
    out_w = [0.0] * d
    in_w = [0.0] * d
    for i in range(d):
        for j in range(d):
            if adj[i, j]:
                out_deg[i] += 1
                in_deg[j] += 1
                out_w[i] += w[i, j]
                in_w[j] += w[i, j]

    def remove(v):
        alive[v] = False
        for u in range(d):
            if not alive[u]:
                continue
            if adj[u, v]:
                out_deg[u] -= 1
                out_w[u] -= w[u, v]
            if adj[v, u]:
                in_deg[u] -= 1
                in_w[u] -= w[v, u]

    head = []
    tail_rev = []
    left = d
    while left:
        stripped = True
        while stripped:
            stripped = False
            for v in range(d):
                if alive[v] and out_deg[v] == 0:
                    remove(v)
                    tail_rev.append(v)
                    left -= 1
                    stripped = True
                    break
        stripped = True
        while stripped:
            stripped = False
            for v in range(d):
                if alive[v] and in_deg[v] == 0:
                    remove(v)
                    head.append(v)
                    left -= 1
                    stripped = True
                    break
        if left:
            best = -1
            best_delta = 0.0
            for v in range(d):
                if alive[v]:
                    delta = out_w[v] - in_w[v]
                    if best < 0 or delta > best_delta:
                        best = v
                        best_delta = delta
            remove(best)
            head.append(best)
            left -= 1

    head.extend(reversed(tail_rev))
    return np.asarray(head, dtype=np.int64)
