"""Graph types, acyclicity, random DAG generation, DAG -> CPDAG.

Conventions used throughout the package:

* digraph: d x d {0,1} ndarray ``A`` with zero diagonal, A[i, j] = 1 iff
  edge i -> j.
* pdag (CPDAG): d x d {0,1} ndarray ``P``; P[i, j] = P[j, i] = 1 encodes an
  undirected edge i - j, P[i, j] = 1 alone encodes i -> j.

Edge-list text format: header line ``# d=<n>``, then one ``i<TAB>j`` pair
per line (0-based).  Pdag files carry a third column, ``d`` for directed,
``u`` for undirected.
"""

import numpy as np


def as_adjacency(a, name: str = "adjacency") -> np.ndarray:
    """Validate and return a zero-diagonal binary matrix as int8."""
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if np.diag(arr).any():
        raise ValueError(f"{name} has nonzero diagonal")
    out = arr.astype(np.int8, copy=True)
    if not np.isin(out, (0, 1)).all() or not (out == arr).all():
        raise ValueError(f"{name} entries must be 0 or 1")
    return out


def is_acyclic(adj) -> bool:
    """True iff the digraph has no directed cycle (Kahn peeling)."""
    a = np.asarray(adj, dtype=bool)
    d = a.shape[0]
    indeg = a.sum(axis=0).astype(np.int64)
    alive = np.ones(d, dtype=bool)
    left = d
    while left:
        frontier = alive & (indeg == 0)
        if not frontier.any():
            return False
        alive &= ~frontier
        indeg -= a[frontier].sum(axis=0)
        left -= int(frontier.sum())
    return True


def topological_order(adj) -> np.ndarray:
    """Node order with every edge pointing forward.

    Layered Kahn peeling; within a layer nodes come out in ascending index,
    so the result is deterministic (empty graph -> 0..d-1).
    """
    a = np.asarray(adj, dtype=bool)
    d = a.shape[0]
    indeg = a.sum(axis=0).astype(np.int64)
    alive = np.ones(d, dtype=bool)
    order = []
    left = d
    while left:
        frontier = alive & (indeg == 0)
        if not frontier.any():
            raise ValueError("not a DAG")
        nodes = np.flatnonzero(frontier)
        order.append(nodes)
        alive &= ~frontier
        indeg -= a[frontier].sum(axis=0)
        left -= len(nodes)
    return np.concatenate(order) if order else np.empty(0, dtype=np.int64)


def random_er_dag(d: int, k, seed) -> np.ndarray:
    """Erdos-Renyi DAG: join each unordered pair with p = 2k/(d-1), then
    orient along a uniformly random node permutation.  Expected edge count
    is d*k (p is capped at 1, so very dense requests saturate).
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    p = min(1.0, 2.0 * k / (d - 1))
    iu = np.triu_indices(d, 1)
    joined = rng.random(len(iu[0])) < p
    perm = rng.permutation(d)
    pos = np.empty(d, dtype=np.int64)
    pos[perm] = np.arange(d)
    sym = np.zeros((d, d), dtype=bool)
    sym[iu] = joined
    sym |= sym.T
    adj = sym & (pos[:, None] < pos[None, :])
    return adj.astype(np.int8)


def random_sf_dag(d: int, k: int, seed) -> np.ndarray:
    """Scale-free DAG: Barabasi-Albert preferential attachment over a random
    arrival order, edges oriented earlier -> later arrival.

    The first k+1 arrivals form a clique; each later arrival attaches to k
    distinct existing nodes chosen without replacement with probability
    proportional to current degree.  Edge count is exactly k*(d - (k+1)/2).
    """
    if not 1 <= k < d:
        raise ValueError("need 1 <= k < d")
    rng = np.random.default_rng(seed)
    arrival = rng.permutation(d)
    adj = np.zeros((d, d), dtype=np.int8)
    deg = np.zeros(d, dtype=np.int64)
    for a in range(k + 1):
        for b in range(a + 1, k + 1):
            adj[arrival[a], arrival[b]] = 1
    deg[arrival[: k + 1]] = k
    for m in range(k + 1, d):
        cand = arrival[:m]
        w = deg[cand].astype(np.float64)
        chosen = []
        for _ in range(k):
            t = rng.choice(len(cand), p=w / w.sum())
            chosen.append(cand[t])
            w[t] = 0.0
        for u in chosen:
            adj[u, arrival[m]] = 1
            deg[u] += 1
        deg[arrival[m]] = k
    return adj


def _meek_closure(dir_, und):
    """Apply Meek rules 1-4 until fixpoint.  dir_ and und are modified."""
    d = dir_.shape[0]
    adj = (dir_ | dir_.T | und).astype(bool)

    def orient(i, j):
        und[i, j] = und[j, i] = 0
        dir_[i, j] = 1

    changed = True
    while changed:
        changed = False
        for i in range(d):
            for j in range(d):
                if not und[i, j]:
                    continue
                # R1: a -> i, i - j, a and j non-adjacent
                for a in range(d):
                    if dir_[a, i] and not adj[a, j] and a != j:
                        orient(i, j)
                        changed = True
                        break
                if not und[i, j]:
                    continue
                # R2: i -> b -> j with i - j
                if (dir_[i] & dir_[:, j]).any():
                    orient(i, j)
                    changed = True
                    continue
                # R3: i - a, i - b, a -> j, b -> j, a and b non-adjacent
                parents = np.flatnonzero(und[i] & dir_[:, j])
                done = False
                for x in range(len(parents)):
                    for y in range(x + 1, len(parents)):
                        if not adj[parents[x], parents[y]]:
                            orient(i, j)
                            changed = True
                            done = True
                            break
                    if done:
                        break
                if not und[i, j]:
                    continue
                # R4: i - a, a -> b, b -> j, a and j non-adjacent
                for a in range(d):
                    if und[i, a] and not adj[a, j] and (dir_[a] & dir_[:, j]).any():
                        orient(i, j)
                        changed = True
                        break


def dag_to_cpdag(adj) -> np.ndarray:
    """CPDAG of a DAG: skeleton plus v-structures, closed under Meek rules.

    Edges not compelled by any rule come out undirected (both entries 1).
    """
    a = as_adjacency(adj)
    if not is_acyclic(a):
        raise ValueError("not a DAG")
    d = a.shape[0]
    adjacent = (a | a.T).astype(bool)
    dir_ = np.zeros((d, d), dtype=np.int8)
    und = np.zeros((d, d), dtype=np.int8)
    for k in range(d):
        parents = np.flatnonzero(a[:, k])
        for x in range(len(parents)):
            for y in range(x + 1, len(parents)):
                i, j = parents[x], parents[y]
                if not adjacent[i, j]:
                    dir_[i, k] = 1
                    dir_[j, k] = 1
    und |= (a | a.T) & ~(dir_ | dir_.T)
    np.fill_diagonal(und, 0)
    _meek_closure(dir_, und)
    return (dir_ | und).astype(np.int8)


def pdag_edges(pdag):
    """Split a pdag matrix into (directed, undirected) edge lists.

    Directed edges come back as (i, j) meaning i -> j; undirected pairs as
    (i, j) with i < j.  Both lists are in row-major pair order.
    """
    p = np.asarray(pdag)
    d = p.shape[0]
    directed = []
    undirected = []
    for i in range(d):
        for j in range(i + 1, d):
            if p[i, j] and p[j, i]:
                undirected.append((i, j))
            elif p[i, j]:
                directed.append((i, j))
            elif p[j, i]:
                directed.append((j, i))
    return directed, undirected


def save_edges(path, adj) -> None:
    """Write a digraph as an edge-list file (deterministic row-major order)."""
    a = as_adjacency(adj)
    rows, cols = np.nonzero(a)
    lines = [f"# d={a.shape[0]}"]
    lines += [f"{i}\t{j}" for i, j in zip(rows, cols)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_edges(path) -> np.ndarray:
    """Read a digraph edge-list file written by save_edges."""
    d, entries = _read_edge_lines(path, want_status=False)
    adj = np.zeros((d, d), dtype=np.int8)
    for i, j, _ in entries:
        adj[i, j] = 1
    return adj


def save_pdag(path, pdag) -> None:
    """Write a pdag as a 3-column edge list, third column d/u."""
    directed, undirected = pdag_edges(pdag)
    d = np.asarray(pdag).shape[0]
    lines = [f"# d={d}"]
    lines += [f"{i}\t{j}\td" for i, j in directed]
    lines += [f"{i}\t{j}\tu" for i, j in undirected]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_pdag(path) -> np.ndarray:
    d, entries = _read_edge_lines(path, want_status=True)
    p = np.zeros((d, d), dtype=np.int8)
    for i, j, status in entries:
        p[i, j] = 1
        if status == "u":
            p[j, i] = 1
    return p


def _read_edge_lines(path, want_status):
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw or not raw[0].startswith("# d="):
        raise ValueError(f"{path}: missing '# d=<n>' header")
    try:
        d = int(raw[0][4:])
    except ValueError:
        raise ValueError(f"{path}: bad header {raw[0]!r}") from None
    entries = []
    for ln, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        n_want = 3 if want_status else 2
        if len(parts) != n_want:
            raise ValueError(f"{path}:{ln}: expected {n_want} columns")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"{path}:{ln}: non-integer node id") from None
        if not (0 <= i < d and 0 <= j < d) or i == j:
            raise ValueError(f"{path}:{ln}: bad edge {i}->{j} for d={d}")
        status = parts[2] if want_status else ""
        if want_status and status not in ("d", "u"):
            raise ValueError(f"{path}:{ln}: status must be 'd' or 'u'")
        entries.append((i, j, status))
    return d, entries
