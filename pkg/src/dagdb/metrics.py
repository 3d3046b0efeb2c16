"""CPDAG-based evaluation: SHD_C, nSHD_C, precision_C, recall_C.

Both graphs are converted to the CPDAGs of their Markov equivalence classes
before comparison; per unordered pair the join status is one of
{unjoined, i->j, i<-j, i-j} and directed-forward, directed-backward and
undirected count as three distinct edge types.
"""

from dataclasses import dataclass, asdict

import numpy as np

from dagdb import graphs


@dataclass
class MetricReport:
    shd_c: int
    nshd_c: float
    precision_c: float
    recall_c: float
    pred_size: int

    def to_dict(self) -> dict:
        return asdict(self)


def _pair_status(mat) -> np.ndarray:
    """Status per unordered pair i<j: 0 none, 1 i->j, 2 i<-j, 3 i-j."""
    m = (np.asarray(mat) != 0).astype(np.int64)
    iu = np.triu_indices(m.shape[0], 1)
    return m[iu] + 2 * m.T[iu]


def _check_same_d(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def shd_cpdag(true_dag, pred_dag) -> int:
    """Count of unordered pairs whose CPDAG join status differs."""
    t, p = _check_same_d(true_dag, pred_dag)
    st = _pair_status(graphs.dag_to_cpdag(t))
    sp = _pair_status(graphs.dag_to_cpdag(p))
    return int((st != sp).sum())


def precision_cpdag(true_dag, pred_dag) -> float:
    t, p = _check_same_d(true_dag, pred_dag)
    st = _pair_status(graphs.dag_to_cpdag(t))
    sp = _pair_status(graphs.dag_to_cpdag(p))
    hits = int(((st == sp) & (sp != 0)).sum())
    return hits / max(1, int((sp != 0).sum()))


def recall_cpdag(true_dag, pred_dag) -> float:
    t, p = _check_same_d(true_dag, pred_dag)
    st = _pair_status(graphs.dag_to_cpdag(t))
    sp = _pair_status(graphs.dag_to_cpdag(p))
    hits = int(((st == sp) & (st != 0)).sum())
    return hits / max(1, int((st != 0).sum()))


def shd_raw(true_dag, pred_dag) -> int:
    """Pair-status distance on the raw DAGs, no CPDAG conversion.

    Debugging aid only; the class metrics above are the reported ones.
    """
    t, p = _check_same_d(true_dag, pred_dag)
    return int((_pair_status(t) != _pair_status(p)).sum())


def report(true_dag, pred_dag) -> MetricReport:
    """All four class metrics plus the predicted DAG's edge count."""
    t, p = _check_same_d(true_dag, pred_dag)
    d = t.shape[0]
    st = _pair_status(graphs.dag_to_cpdag(t))
    sp = _pair_status(graphs.dag_to_cpdag(p))
    shd = int((st != sp).sum())
    hits = int(((st == sp) & (sp != 0)).sum())
    return MetricReport(
        shd_c=shd,
        nshd_c=shd / d,
        precision_c=hits / max(1, int((sp != 0).sum())),
        recall_c=hits / max(1, int((st != 0).sum())),
        pred_size=int((np.asarray(p) != 0).sum()),
    )
