"""Command-line interface.

Subcommands: ``gen`` (synthetic dataset), ``train`` (fit one dataset),
``eval`` (metrics for a predicted edge list against a truth edge list),
``bench`` (multi-graph campaigns, optionally with the ablation grid), and
``rerun`` (re-execute any command from its manifest).

Every command writes a RunManifest JSON capturing the resolved parameters;
re-running from the manifest reproduces edge-list and metric artifacts
byte for byte (benchmark wall_seconds excepted, by nature).  Exit codes:
0 success, 2 usage or validation error, 3 numeric failure in training.
"""

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from dagdb import __version__, data, graphs, metrics, pipeline
from dagdb.pipeline import DivergenceError, TrainConfig

GEN_FILES = {"truth": "truth_edges.tsv", "weights": "weights.csv",
             "data": "data.csv", "manifest": "manifest.json"}
TRAIN_FILES = {"predicted": "predicted_edges.tsv", "result": "result.json",
               "manifest": "manifest.json"}

BENCH_COLUMNS = ["graph_type", "d", "seed", "method", "shd_c", "nshd_c",
                 "precision_c", "recall_c", "pred_size", "wall_seconds",
                 "status"]


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(path, command: str, params: dict, inputs: dict,
                    outputs: dict, seeds: dict) -> None:
    _write_json(path, {
        "tool": "dagdb",
        "version": __version__,
        "command": command,
        "params": params,
        "inputs": inputs,
        "outputs": outputs,
        "seeds": seeds,
    })


def expected_edges(graph_type: str, k, d: int) -> float:
    """Expected (er) or exact (sf) edge count of the generators."""
    if graph_type == "er":
        return d * k
    if graph_type == "sf":
        return k * (d - (k + 1) / 2)
    raise ValueError(f"unknown graph type {graph_type!r}")


def _gen_instance(graph_type: str, d: int, k, sigma2: float, n: int, seed: int):
    if graph_type == "er":
        dag = graphs.random_er_dag(d, k, seed=[seed, 0])
    elif graph_type == "sf":
        dag = graphs.random_sf_dag(d, int(k), seed=[seed, 0])
    else:
        raise ValueError(f"unknown graph type {graph_type!r}")
    lanm = data.make_lanm(dag, sigma2, np.random.default_rng([seed, 1]))
    ds = data.simulate(lanm, n, np.random.default_rng([seed, 2]))
    return dag, lanm, ds


def cmd_gen(graph_type: str, d: int, k, sigma2: float, n: int, seed: int,
            out_dir: str) -> dict:
    dag, lanm, ds = _gen_instance(graph_type, d, k, sigma2, n, seed)
    os.makedirs(out_dir, exist_ok=True)
    paths = {key: os.path.join(out_dir, name)
             for key, name in GEN_FILES.items()}
    graphs.save_edges(paths["truth"], dag)
    np.savetxt(paths["weights"], lanm.weights, delimiter=",", fmt="%.17g")
    np.savetxt(paths["data"], ds.x, delimiter=",", fmt="%.17g")
    params = {"graph_type": graph_type, "d": d, "k": k, "sigma2": sigma2,
              "n": n, "seed": seed, "out_dir": out_dir}
    _write_manifest(paths["manifest"], "gen", params, inputs={},
                    outputs={key: GEN_FILES[key] for key in
                             ("truth", "weights", "data")},
                    seeds={"graph": [seed, 0], "weights": [seed, 1],
                           "noise": [seed, 2]})
    print(f"{graph_type} d={d} k={k}: {int(dag.sum())} edges, "
          f"data {ds.n}x{ds.d} -> {out_dir}")
    return paths


def cmd_train(data_path: str, cfg: TrainConfig, out_dir: str,
              center: bool = False, overrides: dict | None = None) -> dict:
    ds = data.load_csv(data_path, has_header=None, center=center)
    os.makedirs(out_dir, exist_ok=True)
    paths = {key: os.path.join(out_dir, name)
             for key, name in TRAIN_FILES.items()}
    params = {"config": cfg.to_dict(), "center": center,
              "out_dir": out_dir, "overrides": overrides or {}}
    _write_manifest(paths["manifest"], "train", params,
                    inputs={"data": os.path.abspath(data_path)},
                    outputs={"predicted": TRAIN_FILES["predicted"],
                             "result": TRAIN_FILES["result"]},
                    seeds={"seed": cfg.seed})
    result = pipeline.train(ds.x, cfg)
    graphs.save_edges(paths["predicted"], result.predicted_dag)
    _write_json(paths["result"], {
        "theta": result.theta.tolist(),
        "phi": result.phi.tolist(),
        "history": [vars(h) for h in result.history],
        "pred_size": int(result.predicted_dag.sum()),
    })
    print(json.dumps({"pred_size": int(result.predicted_dag.sum()),
                      "final_loss": result.history[-1].total,
                      "out_dir": out_dir}, sort_keys=True))
    return paths


def cmd_eval(truth_path: str, pred_path: str, out_path: str | None = None) -> metrics.MetricReport:
    truth = graphs.load_edges(truth_path)
    pred = graphs.load_edges(pred_path)
    rep = metrics.report(truth, pred)
    text = json.dumps(rep.to_dict(), indent=2, sort_keys=True)
    print(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
        _write_manifest(out_path + ".manifest.json", "eval",
                        {"out": out_path},
                        inputs={"truth": os.path.abspath(truth_path),
                                "pred": os.path.abspath(pred_path)},
                        outputs={"metrics": os.path.basename(out_path)},
                        seeds={})
    return rep


def _graph_seed(master: int, type_code: int, k, d: int, index: int) -> list:
    return [master, type_code, int(round(10 * k)), d, index]


def _ablation_variants(cfg: TrainConfig, graph_type: str, k, d: int):
    """The 2^3 grid over (max-size, dag regularizer, sparsity regularizer).

    Cell tags: capital letter = component on, lower = off, order M/D/S.
    """
    m_auto = int(round(cfg.max_size_scale * expected_edges(graph_type, k, d)))
    out = []
    for m_on in (True, False):
        for dag_on in (True, False):
            for sp_on in (True, False):
                tag = ("M" if m_on else "m") + ("D" if dag_on else "d") \
                    + ("S" if sp_on else "s")
                out.append((tag, replace(
                    cfg,
                    M=m_auto if m_on else None,
                    rho_dag=cfg.rho_dag if dag_on else 0.0,
                    rho_sp=cfg.rho_sp if sp_on else 0.0)))
    return out


def _bench_one(task: dict) -> dict:
    """Generate one graph, train one method variant, evaluate.  Returns a
    benchmark CSV row; failures are recorded in the status column."""
    row = {c: "" for c in BENCH_COLUMNS}
    row.update(graph_type=f"{task['graph_type']}{task['k']:g}",
               d=task["d"], seed=task["train_seed"], method=task["method"])
    started = time.perf_counter()
    try:
        dag, _, ds = _gen_instance(task["graph_type"], task["d"], task["k"],
                                   task["sigma2"], task["n"],
                                   seed=task["gen_seed"])
        cfg = TrainConfig.from_dict(task["config"])
        result = pipeline.train(ds.x, cfg)
        rep = metrics.report(dag, result.predicted_dag)
        row.update(shd_c=rep.shd_c, nshd_c=f"{rep.nshd_c:.6g}",
                   precision_c=f"{rep.precision_c:.6g}",
                   recall_c=f"{rep.recall_c:.6g}", pred_size=rep.pred_size,
                   status="ok")
    except Exception as exc:  # partial failure -> row, campaign continues
        row["status"] = f"error: {exc}"
    row["wall_seconds"] = f"{time.perf_counter() - started:.3f}"
    return row


def cmd_bench(graph_types, d_list, n_graphs: int, preset_name: str,
              seed: int, out_csv: str, sigma2: float = 1.0,
              ablate: bool = False) -> list:
    base = pipeline.preset(preset_name)
    tasks = []
    for graph_type, k in graph_types:
        type_code = {"er": 0, "sf": 1}[graph_type]
        for d in d_list:
            if ablate:
                variants = _ablation_variants(base, graph_type, k, d)
            else:
                cfg = base
                if cfg.M is not None:
                    cfg = replace(cfg, M=int(round(
                        cfg.max_size_scale * expected_edges(graph_type, k, d))))
                variants = [("", cfg)]
            for index in range(n_graphs):
                entropy = _graph_seed(seed, type_code, k, d, index)
                gen_seed = int(np.random.default_rng(entropy + [0]).integers(2 ** 31))
                train_seed = int(np.random.default_rng(entropy + [1]).integers(2 ** 31))
                for tag, cfg in variants:
                    method = preset_name + (f":{tag}" if tag else "")
                    tasks.append({
                        "graph_type": graph_type, "k": k, "d": d,
                        "sigma2": sigma2, "n": cfg.n, "index": index,
                        "gen_seed": gen_seed, "train_seed": train_seed,
                        "method": method,
                        "config": replace(cfg, seed=train_seed).to_dict(),
                    })

    workers = int(os.environ.get("DAGDB_THREADS", "1") or "1")
    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(task) for task in tasks]

    with open(out_csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS,
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    _write_manifest(out_csv + ".manifest.json", "bench", {
        "graph_types": [[t, k] for t, k in graph_types],
        "d_list": list(d_list), "n_graphs": n_graphs,
        "preset": preset_name, "seed": seed, "sigma2": sigma2,
        "ablate": ablate, "out_csv": out_csv,
    }, inputs={}, outputs={"csv": os.path.basename(out_csv)},
        seeds={"master": seed})
    ok = sum(1 for r in rows if r["status"] == "ok")
    print(f"{len(rows)} rows ({ok} ok) -> {out_csv}")
    return rows


def cmd_rerun(manifest_path: str, out_dir: str | None = None) -> None:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    command = manifest.get("command")
    params = manifest.get("params", {})
    inputs = manifest.get("inputs", {})
    if command == "gen":
        cmd_gen(params["graph_type"], params["d"], params["k"],
                params["sigma2"], params["n"], params["seed"],
                out_dir or params["out_dir"])
    elif command == "train":
        cfg = TrainConfig.from_dict(params["config"])
        cmd_train(inputs["data"], cfg, out_dir or params["out_dir"],
                  center=params.get("center", False),
                  overrides=params.get("overrides"))
    elif command == "eval":
        target = params["out"]
        if out_dir:
            target = os.path.join(out_dir, os.path.basename(target))
        cmd_eval(inputs["truth"], inputs["pred"], target)
    elif command == "bench":
        target = params["out_csv"]
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            target = os.path.join(out_dir, os.path.basename(target))
        cmd_bench([tuple(t) for t in params["graph_types"]],
                  params["d_list"], params["n_graphs"], params["preset"],
                  params["seed"], target, sigma2=params["sigma2"],
                  ablate=params["ablate"])
    else:
        raise ValueError(f"manifest has unknown command {command!r}")


def _parse_types(text: str):
    """'er2,sf4' -> [('er', 2.0), ('sf', 4.0)]."""
    out = []
    for item in text.split(","):
        item = item.strip()
        for kind in ("er", "sf"):
            if item.startswith(kind) and item[len(kind):]:
                out.append((kind, float(item[len(kind):])))
                break
        else:
            raise ValueError(f"bad graph type {item!r}, expected like 'er2'")
    return out


_OVERRIDE_FIELDS = [
    ("epochs", int), ("batch_size", int), ("S", int), ("tau", float),
    ("theta_init_width", float), ("lr_theta", float), ("lr_phi", float),
    ("rho_dag", float), ("rho_sp", float), ("lam", float), ("seed", int),
    ("estimator", str), ("max_size_scale", float),
]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dagdb",
        description="DAG structure learning by discrete backpropagation "
                    "over sampled adjacency matrices.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic LANM dataset")
    p_gen.add_argument("graph_type", choices=("er", "sf"))
    p_gen.add_argument("--d", type=int, required=True)
    p_gen.add_argument("--k", type=float, default=2)
    p_gen.add_argument("--sigma2", type=float, default=1.0)
    p_gen.add_argument("--n", type=int, default=1000)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out-dir", default=".")

    p_train = sub.add_parser("train", help="train on a CSV dataset")
    p_train.add_argument("data")
    src = p_train.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(pipeline.PRESETS))
    src.add_argument("--config", help="TrainConfig JSON file")
    p_train.add_argument("--out-dir", default=".")
    p_train.add_argument("--center", action="store_true",
                         help="subtract column means (recommended for real data)")
    p_train.add_argument("--max-size", default=None,
                         help="max edge count M, integer, 'none', or 'auto' "
                              "(auto needs --expected-edges)")
    p_train.add_argument("--expected-edges", type=float, default=None)
    p_train.add_argument("--train-with-dag", action="store_true", default=None)
    p_train.add_argument("--no-shuffle", action="store_true", default=None)
    p_train.add_argument("--ste-mean-over-samples", action="store_true",
                         default=None)
    for name, typ in _OVERRIDE_FIELDS:
        p_train.add_argument(f"--{name.replace('_', '-').lower()}",
                             dest=f"ov_{name}", type=typ, default=None)

    p_eval = sub.add_parser("eval", help="metrics for predicted vs truth edge lists")
    p_eval.add_argument("truth")
    p_eval.add_argument("pred")
    p_eval.add_argument("--out", default=None, help="also write metrics JSON here")

    p_bench = sub.add_parser("bench", help="multi-graph benchmark campaign")
    p_bench.add_argument("--types", required=True,
                         help="comma list like er2,sf4")
    p_bench.add_argument("--d", required=True, help="comma list like 10,30")
    p_bench.add_argument("--n-graphs", type=int, required=True)
    p_bench.add_argument("--preset", required=True,
                         choices=sorted(pipeline.PRESETS))
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--sigma2", type=float, default=1.0)
    p_bench.add_argument("--ablate", action="store_true")
    p_bench.add_argument("--out", default="bench.csv")

    p_rerun = sub.add_parser("rerun", help="re-execute a command from its manifest")
    p_rerun.add_argument("manifest")
    p_rerun.add_argument("--out-dir", default=None)
    return parser


def _train_from_args(args) -> int:
    if args.preset:
        cfg = pipeline.preset(args.preset)
    else:
        with open(args.config) as fh:
            cfg = TrainConfig.from_dict(json.load(fh))
    overrides = {}
    for name, _ in _OVERRIDE_FIELDS:
        val = getattr(args, f"ov_{name}")
        if val is not None:
            overrides[name] = val
    if args.no_shuffle:
        overrides["shuffle"] = False
    if args.train_with_dag:
        overrides["train_with_dag"] = True
    if args.ste_mean_over_samples:
        overrides["ste_mean_over_samples"] = True
    if args.max_size is not None:
        text = str(args.max_size).lower()
        if text == "none":
            overrides["M"] = None
        elif text == "auto":
            if args.expected_edges is None:
                raise ValueError("--max-size auto requires --expected-edges")
            scale = overrides.get("max_size_scale", cfg.max_size_scale)
            overrides["M"] = int(round(scale * args.expected_edges))
        else:
            overrides["M"] = int(text)
    cfg = replace(cfg, **overrides)
    cmd_train(args.data, cfg, args.out_dir, center=args.center,
              overrides=overrides)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            cmd_gen(args.graph_type, args.d, args.k, args.sigma2, args.n,
                    args.seed, args.out_dir)
        elif args.command == "train":
            return _train_from_args(args)
        elif args.command == "eval":
            cmd_eval(args.truth, args.pred, args.out)
        elif args.command == "bench":
            cmd_bench(_parse_types(args.types),
                      [int(v) for v in args.d.split(",")],
                      args.n_graphs, args.preset, args.seed, args.out,
                      sigma2=args.sigma2, ablate=args.ablate)
        elif args.command == "rerun":
            cmd_rerun(args.manifest, args.out_dir)
    except DivergenceError as exc:
        print(json.dumps({
            "error": "divergence",
            "epoch": exc.epoch,
            "batch_index": exc.batch_index,
            "loss": vars(exc.loss),
        }, sort_keys=True))
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
