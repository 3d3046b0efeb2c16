import numpy as np
import pytest

import oracles
from dagdb import graphs, maxdag


def three_cycle():
    adj = np.zeros((3, 3), dtype=np.int8)
    w = np.zeros((3, 3))
    adj[0, 1] = adj[1, 2] = adj[2, 0] = 1
    w[0, 1], w[1, 2], w[2, 0] = 3.0, 2.0, 1.0
    return adj, w


def random_instance(rng, d, p=0.5, negatives=True):
    adj = (rng.random((d, d)) < p).astype(np.int8)
    np.fill_diagonal(adj, 0)
    w = rng.normal(size=(d, d)) if negatives else rng.uniform(0.1, 2.0, (d, d))
    w *= adj
    return adj, w


class TestGfas:
    def test_three_cycle_drops_lightest(self):
        adj, w = three_cycle()
        res = maxdag.gfas_max_dag(adj, w)
        assert res.kept_weight == 5.0
        assert res.dag[2, 0] == 0 and res.dag[0, 1] == 1 and res.dag[1, 2] == 1

    def test_acyclic_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            d = int(rng.integers(2, 9))
            dag = graphs.random_er_dag(d, 1.5, rng)
            w = rng.normal(size=(d, d)) * dag
            res = maxdag.gfas_max_dag(dag, w)
            assert (res.dag == dag).all()
            assert res.kept_weight == pytest.approx(w.sum())

    def test_tied_two_cycle_deterministic(self):
        adj = np.array([[0, 1], [1, 0]], dtype=np.int8)
        w = np.array([[0.0, 5.0], [5.0, 0.0]])
        first = maxdag.gfas_max_dag(adj, w)
        assert first.dag.sum() == 1 and first.kept_weight == 5.0
        for _ in range(5):
            again = maxdag.gfas_max_dag(adj, w)
            assert (again.dag == first.dag).all()

    def test_output_consistency_fuzz(self):
        rng = np.random.default_rng(42)
        for _ in range(150):
            d = int(rng.integers(2, 9))
            adj, w = random_instance(rng, d)
            res = maxdag.gfas_max_dag(adj, w)
            assert graphs.is_acyclic(res.dag)
            assert (res.dag <= adj).all()
            assert res.kept_weight == pytest.approx((w * res.dag).sum())
            # dag is exactly the forward edges of the reported ordering
            pos = np.empty(d, dtype=np.int64)
            pos[res.ordering] = np.arange(d)
            forward = adj & (pos[:, None] < pos[None, :])
            assert (res.dag == forward).all()

    def test_rejects_nonfinite_weights(self):
        adj = np.array([[0, 1], [0, 0]], dtype=np.int8)
        w = np.array([[0.0, np.inf], [0.0, 0.0]])
        with pytest.raises(ValueError):
            maxdag.gfas_max_dag(adj, w)


class TestExact:
    def test_three_cycle(self):
        adj, w = three_cycle()
        res = maxdag.exact_max_dag(adj, w)
        assert res.kept_weight == 5.0

    def test_acyclic_keeps_positive_weights(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            d = int(rng.integers(2, 7))
            dag = graphs.random_er_dag(d, 1.5, rng)
            w = rng.uniform(0.1, 2.0, (d, d)) * dag
            res = maxdag.exact_max_dag(dag, w)
            assert res.kept_weight == pytest.approx(w.sum())

    def test_mixed_sign_two_cycle(self):
        adj = np.array([[0, 1], [1, 0]], dtype=np.int8)
        w = np.array([[0.0, 1.0], [-1.0, 0.0]])
        res = maxdag.exact_max_dag(adj, w)
        assert res.kept_weight == 1.0
        assert res.dag[0, 1] == 1 and res.dag[1, 0] == 0

    def test_matches_brute_oracle_fuzz(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            d = int(rng.integers(2, 6))
            adj, w = random_instance(rng, d)
            res = maxdag.exact_max_dag(adj, w)
            want = oracles.brute_max_dag_weight(w, adj)
            assert res.kept_weight == pytest.approx(want)
            assert graphs.is_acyclic(res.dag)
            assert res.kept_weight == pytest.approx((w * res.dag).sum())

    def test_too_large_rejected(self):
        d = maxdag.EXACT_MAX_D + 1
        adj = np.ones((d, d), dtype=np.int8)
        np.fill_diagonal(adj, 0)
        with pytest.raises(ValueError, match="too large"):
            maxdag.exact_max_dag(adj, np.ones((d, d)))


class TestGfasVsExact:
    def test_gfas_never_beats_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(60):
            d = int(rng.integers(2, 7))
            adj, w = random_instance(rng, d, negatives=False)
            g = maxdag.gfas_max_dag(adj, w)
            e = maxdag.exact_max_dag(adj, w)
            assert g.kept_weight <= e.kept_weight + 1e-9
