"""Command-line entry point: generate, simulate, train, eval, reproduce.

Every command validates its inputs before writing anything, derives all
randomness from --seed, and writes one directory per invocation containing a
config echo plus results. Deterministic outputs (results.json, results.csv,
tables, frames) never embed wall-clock times; timing goes to timing.json.

Exit codes: 0 success, 2 usage error, 3 data/format error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import models
from .dynamics import DynamicsSpec, default_initial_state, sample_times, simulate_truth, write_trajectory_csv
from .errors import DegenerateInputError, FormatError, NumericError, StiffnessError
from .graphgen import Graph, default_partition_sizes, gen_barabasi_albert, gen_erdos_renyi, gen_grid8, gen_newman_watts, gen_random_partition, greedy_modularity_reorder, read_edgelist, write_edgelist
from .odeint import Trajectory
from .training import ExperimentPlan, FAMILIES, RunResult, default_terminal_time, evaluate_run, run_plan

LAW_NAMES = {"heat": "Heat Diffusion", "mutualistic": "Mutualistic Interaction", "gene": "Gene Regulation"}
FAMILY_NAMES = {"grid": "Grid", "er": "Random", "ba": "Power Law", "sw": "Small World", "community": "Community"}
VARIANT_NAMES = {
    "ndcn": "NDCN", "no_encode": "No-Encode", "no_graph": "No-Graph",
    "no_control": "No-Control", "rnn_gnn": "RNN-GNN", "gru_gnn": "GRU-GNN",
    "lstm_gnn": "LSTM-GNN",
}

SUITES = ("table1", "table2", "table4", "table5-synthetic", "table5-cora")


def _dump_json(doc, path: Path) -> None:
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _default_jobs() -> int:
    env = os.environ.get("NDCN_JOBS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(p)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"config {p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("config must be a JSON object")
    return doc


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    comments = []
    if args.family == "grid":
        side = int(round(np.sqrt(args.n)))
        if side * side != args.n:
            raise ValueError(f"grid needs a square node count, got {args.n}")
        g = gen_grid8(side)
    elif args.family == "er":
        g = gen_erdos_renyi(args.n, args.p if args.p is not None else 0.1, args.seed)
    elif args.family == "ba":
        g = gen_barabasi_albert(args.n, args.m, args.seed)
    elif args.family == "sw":
        g = gen_newman_watts(args.n, args.k, args.p if args.p is not None else 0.5, args.seed)
    elif args.family == "community":
        sizes = default_partition_sizes(args.n)
        g, _ = gen_random_partition(sizes, args.p_in, args.p_out, args.seed)
        comments.append("blocks: " + " ".join(str(s) for s in sizes))
    else:
        raise ValueError(f"unknown family {args.family!r}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        write_edgelist(g, fh, comments=comments)
    print(f"wrote {out} ({g.n} nodes, {g.num_edges} edges)")
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _frame_matrix(state: np.ndarray, perm: np.ndarray, side: int) -> np.ndarray:
    flat = state[perm, 0]
    frame = np.full(side * side, np.nan)
    frame[: flat.shape[0]] = flat
    return frame.reshape(side, side)


def cmd_simulate(args) -> int:
    if args.graph:
        with open(args.graph) as fh:
            g = read_edgelist(fh)
            family = "file"
    else:
        from .training import make_graph

        g = make_graph(args.family, args.n, args.seed)
        family = args.family
    side = int(np.ceil(np.sqrt(g.n)))
    if side * side == g.n and side >= 4:
        x0 = default_initial_state(side)
    else:
        x0 = np.zeros((g.n, 1))
        x0[0, 0] = 25.0  # non-square graphs get a single hot node
    T = args.T
    if T is None:
        if family in FAMILIES:
            T = default_terminal_time(args.law, family)
        else:
            T = 5.0
    times = sample_times(args.mode, args.count, T, seed=[args.seed, 1])
    traj = simulate_truth(g, DynamicsSpec(args.law), x0, np.concatenate([[0.0], times]))

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _dump_json({"command": "simulate", "law": args.law, "family": family,
                "n": g.n, "T": T, "count": args.count, "mode": args.mode,
                "seed": args.seed, "frames": bool(args.frames)},
               outdir / "config.json")
    with open(outdir / "trajectory.csv", "w") as fh:
        write_trajectory_csv(traj, fh)
    if args.frames:
        # community-detection ordering for generated networks; the grid keeps
        # its natural row-major layout
        perm = np.arange(g.n) if family == "grid" else greedy_modularity_reorder(g)
        fdir = outdir / "frames"
        fdir.mkdir(exist_ok=True)
        with open(fdir / "index.csv", "w") as fh:
            fh.write("frame,t\n")
            for k, t in enumerate(traj.times):
                fh.write(f"{k},{float(t)!r}\n")
        with open(fdir / "ordering.csv", "w") as fh:
            # position k (row-major on the frame grid) holds original node id
            fh.write("position,node\n")
            for k, node in enumerate(perm):
                fh.write(f"{k},{node}\n")
        for k, state in enumerate(traj.values()):
            np.savetxt(fdir / f"frame_{k:04d}.csv", _frame_matrix(state, perm, side),
                       delimiter=",", fmt="%.17g")
    print(f"wrote {outdir} ({len(traj.times)} snapshots)")
    return 0


# ---------------------------------------------------------------------------
# train / eval
# ---------------------------------------------------------------------------

_PLAN_FLAGS = (
    "task", "law", "family", "variant", "n", "terminal_time", "snapshots",
    "run_count", "seed", "lr", "epochs", "weight_decay", "hidden_dim",
    "solver_step", "dataset", "grid_T", "grid_alpha", "sbm_nodes",
    "sbm_blocks", "sbm_p_in", "sbm_p_out", "sbm_noise", "sbm_label_fraction",
    "normalize_features",
)


def _plan_from_args(args) -> ExperimentPlan:
    plan_dict = {}
    for key in _PLAN_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            plan_dict[key] = val
    plan_dict.update(_load_config(getattr(args, "config", None)))
    return ExperimentPlan.from_dict(plan_dict)


def _write_results(outdir: Path, plan: ExperimentPlan, result: RunResult,
                   wall: float, extra_config: dict | None = None) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    config = {"command": "train", "plan": plan.to_dict()}
    if extra_config:
        config.update(extra_config)
    _dump_json(config, outdir / "config.json")
    _dump_json(result.to_json_dict(), outdir / "results.json")
    with open(outdir / "results.csv", "w") as fh:
        result.write_csv(fh)
    if result.params:
        for rec, params in zip(result.runs, result.params):
            if params is not None:
                with open(outdir / f"params_run{rec['run']}.ckpt", "wb") as fh:
                    models.save_params(params, fh)
    _dump_json({"wall_clock_s": wall}, outdir / "timing.json")
    with open(outdir / "log.txt", "w") as fh:
        fh.write(f"runs={len(result.runs)} failures={result.failures}\n")
        for rec in result.runs:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def cmd_train(args) -> int:
    plan = _plan_from_args(args)
    t0 = time.perf_counter()
    result = run_plan(plan, jobs=args.jobs)
    wall = time.perf_counter() - t0
    _write_results(Path(args.out), plan, result, wall)
    for key, agg in result.aggregates.items():
        print(f"{key}: {agg['mean']:.6g} +- {agg['std']:.6g}")
    print(f"failures: {result.failures}; wrote {args.out}")
    return 0


def cmd_eval(args) -> int:
    rundir = Path(args.run_dir)
    config = json.loads((rundir / "config.json").read_text())
    results = json.loads((rundir / "results.json").read_text())
    plan = ExperimentPlan.from_dict(config["plan"])
    wanted = [r for r in results["runs"] if r["status"] == "ok"]
    if args.run is not None:
        wanted = [r for r in wanted if r["run"] == args.run]
        if not wanted:
            raise FileNotFoundError(f"no successful run {args.run} in {rundir}")
    worst = 0.0
    recomputed = {}
    for rec in wanted:
        ckpt = rundir / f"params_run{rec['run']}.ckpt"
        if not ckpt.exists():
            raise FileNotFoundError(ckpt)
        with open(ckpt, "rb") as fh:
            params = models.load_params(fh)
        selected = None
        if plan.task == "classify":
            selected = {k: rec["metrics"][k] for k in ("selected_T", "selected_alpha")}
        metrics = evaluate_run(plan, rec["run"], params, selected)
        recomputed[str(rec["run"])] = metrics
        for key, val in metrics.items():
            stored = rec["metrics"][key]
            diff = abs(val - stored)
            worst = max(worst, diff)
            print(f"run {rec['run']} {key}: recomputed={val!r} stored={stored!r} diff={diff:.3e}")
    if args.out:
        _dump_json(recomputed, Path(args.out))
    if worst > args.tol:
        print(f"checkpoint does not reproduce stored metrics (worst diff {worst:.3e})")
        return 4
    return 0


# ---------------------------------------------------------------------------
# reproduce
# ---------------------------------------------------------------------------


def _parse_cell(cell: str | None):
    if not cell:
        return None, None
    try:
        law, family = cell.split(":")
    except ValueError:
        raise ValueError(f"--cell must look like law:family, got {cell!r}") from None
    if law not in LAW_NAMES or family not in FAMILY_NAMES:
        raise ValueError(f"unknown cell {cell!r}")
    return law, family


def _table_csv(path: Path, rows: dict, variants: list[str], laws: list[str]) -> None:
    with open(path, "w") as fh:
        fh.write("dynamics,method," + ",".join(FAMILY_NAMES[f] for f in FAMILIES) + "\n")
        for law in laws:
            for variant in variants:
                cells = []
                for family in FAMILIES:
                    agg = rows.get((law, family, variant))
                    cells.append("" if agg is None
                                 else f"{100 * agg['mean']:.1f}±{100 * agg['std']:.1f}")
                fh.write(f"{LAW_NAMES[law]},{VARIANT_NAMES[variant]}," + ",".join(cells) + "\n")


def cmd_reproduce(args) -> int:
    overrides = _load_config(getattr(args, "config", None))
    law_filter, family_filter = _parse_cell(args.cell)
    outdir = Path(args.out)
    t0 = time.perf_counter()

    if args.suite in ("table1", "table2", "table4"):
        task = "regular" if args.suite == "table4" else "continuous"
        metric = "interpolation" if args.suite == "table2" else "extrapolation"
        variants = (["lstm_gnn", "gru_gnn", "rnn_gnn", "ndcn"] if args.suite == "table4"
                    else ["no_encode", "no_graph", "no_control", "ndcn"])
        if args.variant:
            if args.variant not in variants:
                raise ValueError(f"variant {args.variant!r} is not part of {args.suite}")
            variants = [args.variant]
        laws = [law_filter] if law_filter else ["heat", "mutualistic", "gene"]
        families = [family_filter] if family_filter else list(FAMILIES)
        plans = []
        for law in laws:
            for family in families:
                for variant in variants:
                    d = {"task": task, "law": law, "family": family,
                         "variant": variant, "run_count": args.runs, "seed": args.seed}
                    d.update(overrides)
                    plans.append(ExperimentPlan.from_dict(d))
        rows = {}
        cell_results = {}
        for plan in plans:
            res = run_plan(plan, jobs=args.jobs)
            key = (plan.law, plan.family, plan.variant)
            if metric in res.aggregates:
                rows[key] = res.aggregates[metric]
            cell_results["_".join(key)] = res
        outdir.mkdir(parents=True, exist_ok=True)
        cells_dir = outdir / "cells"
        cells_dir.mkdir(exist_ok=True)
        for name, res in cell_results.items():
            _dump_json(res.to_json_dict(), cells_dir / f"{name}.json")
        _table_csv(outdir / "table.csv", rows, variants, laws)
    else:
        if args.suite == "table5-cora":
            if not args.data:
                raise FileNotFoundError(
                    "table5-cora needs --data pointing at a bundle directory "
                    "(graph.edgelist, features.csv, labels.csv, split.json); "
                    "see the README for the converter instructions"
                )
            d = {"task": "classify", "dataset": args.data, "run_count": args.runs,
                 "seed": args.seed, "grid_T": [1.2], "grid_alpha": [0.0]}
        else:
            d = {"task": "classify", "dataset": "sbm", "run_count": args.runs,
                 "seed": args.seed, "hidden_dim": 64,
                 "grid_T": [1.0], "grid_alpha": [0.0, 0.5]}
        d.update(overrides)
        plan = ExperimentPlan.from_dict(d)
        res = run_plan(plan, jobs=args.jobs)
        outdir.mkdir(parents=True, exist_ok=True)
        _dump_json(res.to_json_dict(), outdir / "results.json")
        with open(outdir / "table.csv", "w") as fh:
            fh.write("dataset,accuracy,std\n")
            agg = res.aggregates.get("accuracy", {"mean": float("nan"), "std": float("nan")})
            fh.write(f"{plan.dataset},{agg['mean']:.4f},{agg['std']:.4f}\n")

    wall = time.perf_counter() - t0
    _dump_json({"command": "reproduce", "suite": args.suite, "runs": args.runs,
                "seed": args.seed, "cell": args.cell, "variant": args.variant},
               outdir / "config.json")
    _dump_json({"wall_clock_s": wall}, outdir / "timing.json")
    print(f"wrote {outdir}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ndcn",
                                     description="Learn continuous-time dynamics on complex networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic network as an edge-list file")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--p", type=float, default=None, help="er/sw probability")
    p.add_argument("--m", type=int, default=5, help="ba attachments per node")
    p.add_argument("--k", type=int, default=5, help="sw ring degree")
    p.add_argument("--p-in", dest="p_in", type=float, default=0.25)
    p.add_argument("--p-out", dest="p_out", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="simulate a ground-truth dynamic and export CSVs")
    p.add_argument("--law", required=True, choices=("heat", "mutualistic", "gene"))
    p.add_argument("--graph", default=None, help="edge-list file (alternative to --family)")
    p.add_argument("--family", default=None, choices=FAMILIES)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--T", type=float, default=None)
    p.add_argument("--count", type=int, default=120)
    p.add_argument("--mode", choices=("irregular", "regular"), default="irregular")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames", action="store_true",
                   help="also write per-snapshot grid matrices")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="run a training plan and write results + checkpoints")
    p.add_argument("--task", choices=("continuous", "regular", "classify"), default=None)
    p.add_argument("--law", choices=("heat", "mutualistic", "gene"), default=None)
    p.add_argument("--family", choices=FAMILIES, default=None)
    p.add_argument("--variant", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--terminal-time", dest="terminal_time", type=float, default=None)
    p.add_argument("--snapshots", type=int, default=None)
    p.add_argument("--runs", dest="run_count", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--weight-decay", dest="weight_decay", type=float, default=None)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=None)
    p.add_argument("--solver-step", dest="solver_step", type=float, default=None)
    p.add_argument("--dataset", default=None)
    p.add_argument("--config", default=None, help="JSON plan overriding the flags")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="recompute test metrics from saved checkpoints")
    p.add_argument("--run-dir", dest="run_dir", required=True)
    p.add_argument("--run", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", default=None, help="optional JSON file for the recomputed metrics")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reproduce", help="run a named experiment suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cell", default=None, help="restrict to one law:family cell")
    p.add_argument("--variant", default=None, help="restrict to one method row")
    p.add_argument("--data", default=None, help="bundle directory for table5-cora")
    p.add_argument("--config", default=None, help="JSON plan overrides")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, DegenerateInputError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (StiffnessError, NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
