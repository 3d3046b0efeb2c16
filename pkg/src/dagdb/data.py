"""Synthetic data from Gaussian equal-variance linear additive noise models,
and CSV ingestion for real datasets."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from dagdb import graphs


@dataclass
class Lanm:
    dag: np.ndarray
    weights: np.ndarray  # nonzero only on dag edges, |w| in [0.5, 2]
    sigma2: float


@dataclass
class Dataset:
    x: np.ndarray
    columns: Optional[list] = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def make_lanm(dag, sigma2: float, rng) -> Lanm:
    """Attach edge weights drawn uniformly from [-2,-0.5] union [0.5,2]:
    magnitude uniform in [0.5, 2], sign uniform."""
    a = graphs.as_adjacency(dag)
    if not graphs.is_acyclic(a):
        raise ValueError("dag must be acyclic")
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    rng = np.random.default_rng(rng)
    d = a.shape[0]
    mag = rng.uniform(0.5, 2.0, size=(d, d))
    sign = np.where(rng.random((d, d)) < 0.5, -1.0, 1.0)
    weights = mag * sign * a
    return Lanm(dag=a, weights=weights, sigma2=float(sigma2))


def simulate(lanm: Lanm, n: int, rng) -> Dataset:
    """Ancestral sampling of u_j = sum_parents w_ij u_i + noise_j."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(rng)
    d = lanm.dag.shape[0]
    order = graphs.topological_order(lanm.dag)
    noise = rng.normal(0.0, np.sqrt(lanm.sigma2), size=(n, d))
    x = np.zeros((n, d))
    for j in order:
        parents = np.flatnonzero(lanm.dag[:, j])
        x[:, j] = noise[:, j]
        if len(parents):
            x[:, j] += x[:, parents] @ lanm.weights[parents, j]
    return Dataset(x=x)


def load_csv(path, has_header: Optional[bool] = None, center: bool = False) -> Dataset:
    """Read a rectangular numeric CSV (comma or tab separated).

    has_header=None sniffs: a first row with any non-numeric cell is taken
    as column names.  center subtracts each column mean.
    """
    with open(path) as fh:
        raw = [line.rstrip("\n").rstrip("\r") for line in fh]
    rows = [line for line in raw if line.strip()]
    if not rows:
        raise ValueError(f"{path}: empty file")
    delim = "\t" if ("\t" in rows[0] and "," not in rows[0]) else ","
    cells = [row.split(delim) for row in rows]

    def numeric(row):
        try:
            [float(c) for c in row]
            return True
        except ValueError:
            return False

    columns = None
    start = 0
    if has_header or (has_header is None and not numeric(cells[0])):
        columns = [c.strip() for c in cells[0]]
        start = 1
        if start == len(cells):
            raise ValueError(f"{path}: header but no data rows")
    width = len(cells[start])
    out = np.empty((len(cells) - start, width))
    for r, row in enumerate(cells[start:], start=start):
        if len(row) != width:
            raise ValueError(
                f"{path}: row {r + 1} has {len(row)} cells, expected {width}")
        for c, cell in enumerate(row):
            try:
                out[r - start, c] = float(cell)
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric cell at row {r + 1}, column {c + 1}: "
                    f"{cell!r}") from None
    if not np.isfinite(out).all():
        raise ValueError(f"{path}: non-finite values in data")
    if center:
        out = out - out.mean(axis=0)
    return Dataset(x=out, columns=columns)
