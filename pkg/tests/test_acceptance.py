"""Acceptance gate: nine end-to-end criteria.

One test per criterion; each prints a single ``criterion N: PASS`` line
with its headline statistics (visible with -s, captured otherwise, and the
test outcome itself doubles as the pass/fail line under -v).  Criteria 7
and 8 are in the slow suite (pass --runslow); criterion 8 additionally
needs the real observational dataset, see the skip message.
"""

import csv
import json
import os
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import oracles
from dagdb import (cli, data, graphs, kernels, maxdag, metrics, model,
                   pipeline, sampling)
from dagdb.pipeline import TrainConfig

DATA_DIR = Path(__file__).parent / "data"

THETA3 = np.array([[0.0, 2.0, -1.0],
                   [0.5, 0.0, 3.0],
                   [-0.2, 0.1, 0.0]])


def _sim_instance(d, k, n, entropy):
    dag = graphs.random_er_dag(d, k, seed=entropy + [0])
    lanm = data.make_lanm(dag, 1.0, np.random.default_rng(entropy + [1]))
    ds = data.simulate(lanm, n, np.random.default_rng(entropy + [2]))
    return dag, ds


def test_criterion_1_dag_reg_zero_iff_acyclic():
    started = time.perf_counter()
    mats = []
    off3 = [(i, j) for i in range(3) for j in range(3) if i != j]
    for bits in range(64):
        z = np.zeros((3, 3))
        for b, (i, j) in enumerate(off3):
            z[i, j] = (bits >> b) & 1
        mats.append(z)
    rng = np.random.default_rng(0)
    five = (rng.random((10_000, 5, 5)) < 0.3).astype(np.float64)
    idx = np.arange(5)
    five[:, idx, idx] = 0.0

    checked = {True: 0, False: 0}
    for batch in (np.stack(mats), five):
        d = batch.shape[1]
        traces, _ = kernels.expm_trace(batch)
        vals = (traces - d) ** 2
        for z, val in zip(batch, vals):
            acyclic = graphs.is_acyclic(z.astype(np.int8))
            checked[acyclic] += 1
            if acyclic:
                assert val < 1e-18
            else:
                assert val >= 1e-18
    elapsed = time.perf_counter() - started
    assert checked[True] > 0 and checked[False] > 0
    assert elapsed < 10
    print(f"criterion 1: PASS - {sum(checked.values())} matrices "
          f"({checked[True]} acyclic), {elapsed:.1f}s")


def test_criterion_2_gradients_match_finite_differences():
    started = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_z = worst_phi = 0.0
    for _ in range(50):
        xb = rng.normal(size=(3, 4))
        z = rng.random((4, 4))
        phi = rng.normal(size=(4, 4))
        np.fill_diagonal(z, 0)
        np.fill_diagonal(phi, 0)
        rho = model.RegCoeffs(float(rng.uniform(0.1, 1.0)),
                              float(rng.uniform(0.001, 0.05)))

        gz = model.grad_z(xb, z, phi, rho)
        fz = oracles.fd_grad(lambda a: model.loss_batch(xb, a, phi, rho).total,
                             z, step=1e-5)
        np.fill_diagonal(fz, 0)
        worst_z = max(worst_z, oracles.rel_err(gz, fz))

        gp = model.grad_phi(xb, z, phi)
        rho0 = model.RegCoeffs(0.0, 0.0)
        fp = oracles.fd_grad(lambda a: model.loss_batch(xb, z, a, rho0).total,
                             phi, step=1e-5)
        np.fill_diagonal(fp, 0)
        worst_phi = max(worst_phi, oracles.rel_err(gp, fp))

    elapsed = time.perf_counter() - started
    assert worst_z < 1e-5 and worst_phi < 1e-5
    assert elapsed < 30
    print(f"criterion 2: PASS - max rel err grad_z {worst_z:.2e}, "
          f"grad_phi {worst_phi:.2e}, {elapsed:.1f}s")


def test_criterion_3_perturb_and_map_fidelity():
    started = time.perf_counter()
    tau = 0.9
    off = ~np.eye(3, dtype=bool)

    rng = np.random.default_rng(2)
    small = sampling.pm_sample(THETA3, tau, 100_000, None, rng)
    want = 1.0 / (1.0 + np.exp(-THETA3 / tau))
    marg_err = np.abs(small.z.mean(axis=0) - want)[off].max()
    assert marg_err < 0.01

    big = sampling.pm_sample(THETA3, tau, 1_000_000, None,
                             np.random.default_rng(3))
    offs, states, probs = oracles.bernoulli_state_probs(THETA3, tau)
    weights = np.zeros((3, 3), dtype=np.int64)
    for b, (i, j) in enumerate(offs):
        weights[i, j] = 1 << b
    codes = (big.z.astype(np.int64) * weights).sum(axis=(1, 2))
    counts = np.bincount(codes, minlength=64)
    state_codes = [sum(bit << b for b, bit in enumerate(bits))
                   for bits in states]
    emp = np.zeros(64)
    emp[state_codes] = counts[state_codes]
    # every drawn code must be an enumerated state
    assert counts.sum() == 1_000_000 and emp.sum() == 1_000_000
    exact = np.zeros(64)
    exact[state_codes] = probs
    tv = 0.5 * np.abs(emp / 1_000_000 - exact).sum()
    elapsed = time.perf_counter() - started
    assert tv < 0.01
    assert elapsed < 120
    print(f"criterion 3: PASS - marginal err {marg_err:.4f}, "
          f"64-state TV {tv:.4f}, {elapsed:.1f}s")


def test_criterion_4_gfas_against_exact_oracle():
    # the 0.9 bound is read in aggregate over the 200 instances: the greedy
    # has no per-instance guarantee (dense d<=7 digraphs occasionally dip to
    # ratio ~0.8, at a ~4% rate), while its mean ratio sits near 0.98
    started = time.perf_counter()
    rng = np.random.default_rng(4)
    ratios = []
    kept_g = kept_e = 0.0
    for t in range(200):
        d = int(rng.integers(2, 8))
        if t % 5 == 0:
            adj = graphs.random_er_dag(d, 1.5, rng)  # acyclic instance
        else:
            adj = (rng.random((d, d)) < 0.6).astype(np.int8)
            np.fill_diagonal(adj, 0)
        w = rng.uniform(0.1, 2.0, (d, d)) * adj
        g = maxdag.gfas_max_dag(adj, w)
        e = maxdag.exact_max_dag(adj, w)
        assert g.kept_weight <= e.kept_weight + 1e-9
        if graphs.is_acyclic(adj):
            assert (g.dag == adj).all() and (e.dag == adj).all()
            assert g.kept_weight == e.kept_weight
        else:
            ratios.append(g.kept_weight / e.kept_weight)
            kept_g += g.kept_weight
            kept_e += e.kept_weight
    elapsed = time.perf_counter() - started
    assert len(ratios) > 100
    mean_ratio = float(np.mean(ratios))
    total_ratio = kept_g / kept_e
    assert mean_ratio >= 0.9
    assert total_ratio >= 0.9
    assert elapsed < 60
    print(f"criterion 4: PASS - mean ratio {mean_ratio:.4f}, total ratio "
          f"{total_ratio:.4f}, worst {min(ratios):.4f} over {len(ratios)} "
          f"cyclic instances, {elapsed:.1f}s")


def test_criterion_5_cpdag_matches_mec_consensus():
    started = time.perf_counter()
    total = 0
    for d in range(1, 5):
        expected = oracles.mec_consensus_map(d)
        for dag in oracles.all_dags(d):
            key = (oracles.skeleton(dag), oracles.v_structures(dag))
            assert (graphs.dag_to_cpdag(dag) == expected[key]).all()
            total += 1
    elapsed = time.perf_counter() - started
    assert total == 1 + 3 + 25 + 543
    assert elapsed < 60
    print(f"criterion 5: PASS - {total} DAGs, {elapsed:.1f}s")


def test_criterion_6_desk_scale_learning():
    started = time.perf_counter()
    cfg = replace(pipeline.preset("STE_84"), M=28)  # 1.4 * 20 expected edges
    vals = []
    for idx in range(6):
        dag, ds = _sim_instance(10, 2, 1000, [100, idx])
        res = pipeline.train(ds.x, replace(cfg, seed=idx))
        vals.append(metrics.report(dag, res.predicted_dag).nshd_c)
    elapsed = time.perf_counter() - started
    mean = float(np.mean(vals))
    assert mean < 1.5
    assert elapsed < 1800
    print(f"criterion 6: PASS - mean nSHD_C {mean:.3f} over 6 graphs "
          f"(empty-graph baseline ~2), {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_7_ablation_reproduction():
    started = time.perf_counter()
    base = pipeline.preset("STE_84")
    insts = [_sim_instance(30, 2, 1000, [700, idx]) for idx in range(6)]

    def mean_stats(cfg):
        vals, precs = [], []
        for idx, (dag, ds) in enumerate(insts):
            res = pipeline.train(ds.x, replace(cfg, seed=idx))
            rep = metrics.report(dag, res.predicted_dag)
            vals.append(rep.nshd_c)
            precs.append(rep.precision_c)
        return float(np.mean(vals)), float(np.mean(precs))

    full_nshd, full_prec = mean_stats(base)
    no_dag_nshd, _ = mean_stats(replace(base, rho_dag=0.0))
    no_m_nshd, _ = mean_stats(replace(base, M=None))
    elapsed = time.perf_counter() - started

    assert full_nshd <= 1.1
    assert full_prec >= 0.65
    assert no_dag_nshd > full_nshd
    assert no_m_nshd > full_nshd
    assert elapsed < 3 * 3600
    print(f"criterion 7: PASS - full nSHD_C {full_nshd:.3f} "
          f"(prec {full_prec:.3f}); ablations: no dag reg {no_dag_nshd:.3f}, "
          f"no max size {no_m_nshd:.3f}; {elapsed:.0f}s")


@pytest.mark.slow
def test_criterion_8_sachs_reproduction():
    csv_path = DATA_DIR / "sachs.csv"
    if not csv_path.exists():
        pytest.skip(
            "real observational dataset not vendored (853 x 11 flow-cytometry "
            "measurements; not redistributable here and the sandbox has no "
            "network access).  To run: obtain the first (purely "
            "observational, cd3cd28) Sachs et al. 2005 dataset, order the "
            "11 columns raf,mek,plcg,pip2,pip3,erk,akt,pka,pkc,p38,jnk as in "
            "tests/data/sachs_truth.tsv, and save as CSV (header optional) "
            "at tests/data/sachs.csv")
    started = time.perf_counter()
    truth = graphs.load_edges(DATA_DIR / "sachs_truth.tsv")
    ds = data.load_csv(csv_path, center=True)
    assert ds.x.shape == (853, 11)
    cfg = pipeline.preset("IMLE_None")
    shds, precs, sizes = [], [], []
    for seed in range(10):
        res = pipeline.train(ds.x, replace(cfg, seed=seed))
        rep = metrics.report(truth, res.predicted_dag)
        shds.append(rep.shd_c)
        precs.append(rep.precision_c)
        sizes.append(rep.pred_size)
    elapsed = time.perf_counter() - started
    med_shd = float(np.median(shds))
    med_prec = float(np.median(precs))
    med_size = float(np.median(sizes))
    assert 11 <= med_shd <= 15
    assert med_prec >= 0.8
    assert 4 <= med_size <= 7
    assert elapsed < 4 * 3600
    print(f"criterion 8: PASS - median SHD_C {med_shd}, precision "
          f"{med_prec:.3f}, size {med_size}; {elapsed:.0f}s")


def test_criterion_9_manifest_reruns_byte_identical(tmp_path):
    started = time.perf_counter()
    gen_dir = tmp_path / "gen"
    cli.main(["gen", "er", "--d", "8", "--k", "2", "--n", "150",
              "--seed", "11", "--out-dir", str(gen_dir)])
    cfg = {"n": 150, "epochs": 10, "batch_size": 25, "S": 3, "M": 8,
           "tau": 0.3, "theta_init_width": 0.1, "lr_theta": 0.02,
           "lr_phi": 0.05, "rho_dag": 0.4, "rho_sp": 0.01, "seed": 1}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    run_dir = tmp_path / "run"
    assert cli.main(["train", str(gen_dir / "data.csv"), "--config",
                     str(cfg_path), "--out-dir", str(run_dir)]) == 0
    metrics_path = tmp_path / "metrics.json"
    assert cli.main(["eval", str(gen_dir / "truth_edges.tsv"),
                     str(run_dir / "predicted_edges.tsv"),
                     "--out", str(metrics_path)]) == 0
    bench_path = tmp_path / "bench.csv"
    tiny = replace(pipeline.preset("STE_84"), n=120, epochs=5,
                   batch_size=20, S=3)
    pipeline.PRESETS["TINY_ACCEPT"] = tiny
    try:
        assert cli.main(["bench", "--types", "er2", "--d", "6",
                         "--n-graphs", "2", "--preset", "TINY_ACCEPT",
                         "--seed", "4", "--out", str(bench_path)]) == 0

        # re-run every command from its manifest into fresh directories
        for manifest, fresh in (
                (gen_dir / "manifest.json", tmp_path / "gen2"),
                (run_dir / "manifest.json", tmp_path / "run2"),
                (Path(str(metrics_path) + ".manifest.json"), tmp_path / "m2"),
                (Path(str(bench_path) + ".manifest.json"), tmp_path / "b2")):
            fresh.mkdir(exist_ok=True)
            assert cli.main(["rerun", str(manifest),
                             "--out-dir", str(fresh)]) == 0
    finally:
        del pipeline.PRESETS["TINY_ACCEPT"]

    pairs = [
        (gen_dir / "truth_edges.tsv", tmp_path / "gen2" / "truth_edges.tsv"),
        (gen_dir / "data.csv", tmp_path / "gen2" / "data.csv"),
        (run_dir / "predicted_edges.tsv",
         tmp_path / "run2" / "predicted_edges.tsv"),
        (run_dir / "result.json", tmp_path / "run2" / "result.json"),
        (metrics_path, tmp_path / "m2" / "metrics.json"),
    ]
    for a, b in pairs:
        assert a.read_bytes() == b.read_bytes(), f"{a} differs from {b}"

    # bench rows must agree on everything except wall time
    def rows_no_wall(path):
        with open(path) as fh:
            return [{k: v for k, v in row.items() if k != "wall_seconds"}
                    for row in csv.DictReader(fh)]

    assert rows_no_wall(bench_path) == rows_no_wall(tmp_path / "b2" / "bench.csv")
    elapsed = time.perf_counter() - started
    print(f"criterion 9: PASS - gen/train/eval byte-identical, bench "
          f"identical up to timing, {elapsed:.1f}s")
