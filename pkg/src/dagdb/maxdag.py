"""Weighted maximum directed acyclic subgraph solvers.

Both solvers return an ordering and keep exactly the input edges that point
forward along it; the objective is the summed weight of kept edges.
Negative-weight edges are kept when aligned, they are never dropped here
(dropping weak edges is the MAP solver's job upstream).
"""

import itertools
from dataclasses import dataclass

import numpy as np

from dagdb import graphs
from dagdb import kernels

EXACT_MAX_D = 10
_CHUNK = 40320


@dataclass
class MaxDagResult:
    dag: np.ndarray
    kept_weight: float
    ordering: np.ndarray


def _check_weights(adj, weights):
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != adj.shape:
        raise ValueError(f"weights shape {w.shape} != adjacency {adj.shape}")
    if not np.isfinite(w).all():
        raise ValueError("weights must be finite")
    return w


def _forward_dag(adj, w, ordering):
    pos = np.empty(len(ordering), dtype=np.int64)
    pos[ordering] = np.arange(len(ordering))
    dag = (adj.astype(bool) & (pos[:, None] < pos[None, :])).astype(np.int8)
    return dag, float((w * dag).sum())


def gfas_max_dag(adj, weights) -> MaxDagResult:
    """Greedy feedback-arc-set solution (weighted Eades-Lin-Smyth).

    Strips sinks to the tail and sources to the head, otherwise removes the
    node with the largest out-weight minus in-weight.  Exact on DAG inputs
    (everything is kept), close to exact in practice on cyclic ones.
    """
    a = graphs.as_adjacency(adj)
    w = _check_weights(a, weights)
    ordering = kernels.gfas_order(a, w)
    dag, kept = _forward_dag(a, w, ordering)
    return MaxDagResult(dag=dag, kept_weight=kept, ordering=ordering)


def exact_max_dag(adj, weights) -> MaxDagResult:
    """Exhaustive solver: enumerate node permutations, keep forward edges,
    maximize kept weight.  Ties break to the lexicographically smallest
    ordering.  Guarded to d <= 10.
    """
    a = graphs.as_adjacency(adj)
    d = a.shape[0]
    if d > EXACT_MAX_D:
        raise ValueError("instance too large for exact solver")
    w = _check_weights(a, weights)
    arcs = list(zip(*np.nonzero(a)))

    best_val = -np.inf
    best_perm = np.arange(d, dtype=np.int64)
    perms = itertools.permutations(range(d))
    while True:
        block = list(itertools.islice(perms, _CHUNK))
        if not block:
            break
        pmat = np.asarray(block, dtype=np.int64).reshape(len(block), d)
        pos = np.argsort(pmat, axis=1)
        kept = np.zeros(len(block))
        for i, j in arcs:
            kept += w[i, j] * (pos[:, i] < pos[:, j])
        t = int(np.argmax(kept)) if len(block) else 0
        if kept[t] > best_val:
            best_val = kept[t]
            best_perm = pmat[t]

    dag, kept_weight = _forward_dag(a, w, best_perm)
    return MaxDagResult(dag=dag, kept_weight=kept_weight, ordering=best_perm)
