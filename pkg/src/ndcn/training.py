"""Losses, the Adam optimizer, and the three experiment protocols.

Protocols (one run = one seed; runs within a plan are independent and can
execute in a process pool):

continuous   irregularly sample 120 snapshots in (0, T]; train on 80 random
             snapshots of the first 100 with full-batch Adam on the l1
             running loss (Euler forward); report normalized l1 on the held
             out 20 (interpolation) and the final 20 (extrapolation).
regular      100 evenly spaced snapshots, inter-sample interval rescaled to
             one time unit; the graph-ODE model integrates with Euler step 1,
             temporal baselines are teacher-forced and evaluated by 20-step
             closed-loop rollout.
classify     train the terminal-loss classifier on the train mask, grid
             search (T, alpha) on the validation mask, report test accuracy.

Per-run RNG streams derive from seed = plan_seed + run_index; sub-streams
(graph, times, split, init) use numpy seed sequences [seed, tag] so the
draws stay independent.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
from dataclasses import asdict, dataclass, fields
from typing import IO, Callable, Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .datasets import LabeledGraphBundle, gen_sbm_bundle, load_bundle
from .dynamics import DynamicsSpec, default_initial_state, sample_times, simulate_truth
from .errors import DegenerateInputError, NumericError, StiffnessError
from .graphgen import Graph, default_partition_sizes, gen_barabasi_albert, gen_erdos_renyi, gen_grid8, gen_newman_watts, gen_random_partition
from .models import ModelSpec, ModelParams, classify_forward, init_params, ndcn_forward, param_count, temporal_forward, temporal_rollout
from .odeint import SolverSpec, Trajectory

__all__ = [
    "FAMILIES",
    "ExperimentPlan",
    "RunResult",
    "l1_loss",
    "normalized_l1",
    "AdamState",
    "adam_step",
    "aggregate",
    "run_plan",
    "run_continuous",
    "run_regular",
    "run_classify",
    "make_graph",
    "default_terminal_time",
    "default_weight_decay",
]

FAMILIES = ("grid", "er", "ba", "sw", "community")

# terminal times (heat lives on very different time scales per network)
_HEAT_T = {"grid": 5.0, "er": 0.1, "ba": 0.75, "sw": 2.0, "community": 0.2}

# l2 regularization defaults per (law, family)
_WD_CONTINUOUS = {
    "heat": {"grid": 1e-3, "er": 1e-6, "ba": 1e-3, "sw": 1e-3, "community": 1e-5},
    "mutualistic": {"grid": 1e-2, "er": 1e-4, "ba": 1e-4, "sw": 1e-4, "community": 1e-4},
    "gene": {"grid": 1e-4, "er": 1e-4, "ba": 1e-4, "sw": 1e-4, "community": 1e-4},
}
_WD_REGULAR_NDCN = {
    "heat": {"grid": 1e-3, "er": 1e-6, "ba": 1e-3, "sw": 1e-3, "community": 1e-5},
    "mutualistic": {"grid": 1e-2, "er": 1e-3, "ba": 1e-4, "sw": 1e-4, "community": 1e-4},
    "gene": {"grid": 1e-4, "er": 1e-4, "ba": 1e-4, "sw": 1e-3, "community": 1e-3},
}
_WD_REGULAR_BASELINE = 1e-3


def default_terminal_time(law: str, family: str) -> float:
    return _HEAT_T[family] if law == "heat" else 5.0


def default_weight_decay(task: str, law: str, family: str, variant: str) -> float:
    if task == "continuous":
        return _WD_CONTINUOUS[law][family]
    if variant in ("rnn_gnn", "gru_gnn", "lstm_gnn"):
        return _WD_REGULAR_BASELINE
    return _WD_REGULAR_NDCN[law][family]


def make_graph(family: str, n: int, seed) -> Graph:
    """Instantiate one of the five network families at its default
    generator parameters."""
    if family == "grid":
        side = int(round(np.sqrt(n)))
        if side * side != n:
            raise ValueError(f"grid family needs a square node count, got {n}")
        return gen_grid8(side)
    if family == "er":
        return gen_erdos_renyi(n, 0.1, seed)
    if family == "ba":
        return gen_barabasi_albert(n, 5, seed)
    if family == "sw":
        return gen_newman_watts(n, 5, 0.5, seed)
    if family == "community":
        g, _ = gen_random_partition(default_partition_sizes(n), 0.25, 0.01, seed)
        return g
    raise ValueError(f"unknown family {family!r}, expected one of {FAMILIES}")


# ---------------------------------------------------------------------------
# Losses and metrics
# ---------------------------------------------------------------------------


def l1_loss(pred: Trajectory, truth: Trajectory) -> ad.DiffMatrix:
    """Mean over snapshots of the mean elementwise absolute difference.
    Differentiable when the prediction carries tape nodes."""
    if not np.array_equal(pred.times, truth.times):
        raise ValueError("prediction and truth must share time stamps")
    total = None
    for p, t in zip(pred.states, truth.values()):
        term = ad.mean_abs_diff(p, t)
        total = term if total is None else ad.add(total, term)
    return ad.scale(total, 1.0 / len(pred.states))


def normalized_l1(pred: Trajectory, truth: Trajectory) -> float:
    """Per snapshot, mean |pred - truth| / mean |truth|; averaged over
    snapshots. Metric only."""
    if not np.array_equal(pred.times, truth.times):
        raise ValueError("prediction and truth must share time stamps")
    ratios = []
    for p, t in zip(pred.values(), truth.values()):
        denom = np.abs(t).mean()
        if denom == 0.0:
            raise DegenerateInputError("truth snapshot has zero mean magnitude")
        ratios.append(np.abs(p - t).mean() / denom)
    return float(np.mean(ratios))


def _l2_penalty(leaves: Mapping[str, ad.DiffMatrix]) -> ad.DiffMatrix:
    total = None
    for leaf in leaves.values():
        term = ad.sum_all(ad.mul_elementwise(leaf, leaf))
        total = term if total is None else ad.add(total, term)
    return total


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def init(cls, params: ModelParams) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(
    params: ModelParams,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    lr: float = 0.01,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> None:
    """Standard Adam with bias correction; updates params/state in place."""
    b1, b2 = betas
    state.step += 1
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, g in grads.items():
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        params[name] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def aggregate(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and sample standard deviation ((k-1) divisor; 0 for a
    single run)."""
    if len(values) == 0:
        raise ValueError("need at least one value")
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return mean, std


# ---------------------------------------------------------------------------
# Plans and results
# ---------------------------------------------------------------------------


@dataclass
class ExperimentPlan:
    task: str = "continuous"
    law: str | None = None
    family: str | None = None
    variant: str = "ndcn"
    n: int = 400
    terminal_time: float | None = None
    snapshots: int | None = None
    run_count: int = 3
    seed: int = 0
    lr: float = 0.01
    epochs: int | None = None
    weight_decay: float | None = None
    hidden_dim: int | None = None
    solver_step: float | None = None
    dataset: str | None = None  # classify: bundle directory or "sbm"
    grid_T: list[float] | None = None
    grid_alpha: list[float] | None = None
    sbm_nodes: int = 200
    sbm_blocks: int = 2
    sbm_p_in: float = 0.1
    sbm_p_out: float = 0.01
    sbm_noise: float = 1.0
    sbm_label_fraction: float = 0.1
    normalize_features: bool = False

    @classmethod
    def from_dict(cls, d: Mapping[str, object]) -> "ExperimentPlan":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown plan keys: {sorted(unknown)}")
        plan = cls(**d)
        plan.validate()
        return plan

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if self.task not in ("continuous", "regular", "classify"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.run_count < 1:
            raise ValueError("run_count must be >= 1")
        if self.task in ("continuous", "regular"):
            if self.law not in ("heat", "mutualistic", "gene"):
                raise ValueError(f"task {self.task} needs a law, got {self.law!r}")
            if self.family not in FAMILIES:
                raise ValueError(f"task {self.task} needs a family, got {self.family!r}")
            side = int(round(np.sqrt(self.n)))
            if side * side != self.n or side < 4:
                raise ValueError("dynamics tasks need a square node count >= 16")
            if self.task == "continuous" and self.variant not in (
                "ndcn", "no_encode", "no_graph", "no_control"
            ):
                raise ValueError(f"continuous task does not support variant {self.variant!r}")
            if self.task == "regular" and self.variant not in (
                "ndcn", "no_encode", "no_graph", "no_control", "rnn_gnn", "gru_gnn", "lstm_gnn"
            ):
                raise ValueError(f"regular task does not support variant {self.variant!r}")
            if self.snapshot_count() < 12:
                raise ValueError("need at least 12 snapshots")
        else:
            if not self.dataset:
                raise ValueError("classify task needs dataset='sbm' or a bundle path")
        if self.epochs is not None and self.epochs < 1:
            raise ValueError("epochs must be >= 1")

    # resolved defaults -----------------------------------------------------

    def snapshot_count(self) -> int:
        if self.snapshots is not None:
            return self.snapshots
        return 120 if self.task == "continuous" else 100

    def resolved_T(self) -> float:
        if self.terminal_time is not None:
            return self.terminal_time
        return default_terminal_time(self.law, self.family)

    def resolved_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return 100 if self.task == "classify" else 2000

    def resolved_hidden(self) -> int:
        if self.hidden_dim is not None:
            return self.hidden_dim
        return 256 if self.task == "classify" else 20

    def resolved_weight_decay(self) -> float:
        if self.weight_decay is not None:
            return self.weight_decay
        if self.task == "classify":
            return 0.024
        return default_weight_decay(self.task, self.law, self.family, self.variant)

    def resolved_grid(self) -> tuple[list[float], list[float]]:
        grid_T = self.grid_T if self.grid_T else [round(0.5 + 0.1 * i, 1) for i in range(11)]
        grid_a = self.grid_alpha if self.grid_alpha else [round(0.2 * i, 1) for i in range(6)]
        return list(grid_T), list(grid_a)


@dataclass
class RunResult:
    plan: ExperimentPlan
    runs: list[dict]
    aggregates: dict[str, dict[str, float]]
    failures: int
    param_total: int | None = None
    params: list | None = None  # trained per-run parameters, not serialized

    def to_json_dict(self) -> dict:
        doc = {
            "plan": self.plan.to_dict(),
            "runs": self.runs,
            "aggregates": self.aggregates,
            "failures": self.failures,
        }
        if self.param_total is not None:
            doc["param_count"] = self.param_total
        return doc

    def write_csv(self, fh: IO[str]) -> None:
        metrics = sorted({m for r in self.runs for m in r.get("metrics", {})})
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run", "seed", "status"] + metrics)
        for r in self.runs:
            row = [r["run"], r["seed"], r["status"]]
            row += [repr(r["metrics"][m]) if m in r.get("metrics", {}) else "" for m in metrics]
            writer.writerow(row)


def _aggregate_runs(runs: list[dict]) -> dict[str, dict[str, float]]:
    ok = [r for r in runs if r["status"] == "ok"]
    keys = sorted({m for r in ok for m in r["metrics"]})
    out = {}
    for key in keys:
        vals = [r["metrics"][key] for r in ok if key in r["metrics"]]
        mean, std = aggregate(vals)
        out[key] = {"mean": mean, "std": std}
    return out


# ---------------------------------------------------------------------------
# Shared training loop
# ---------------------------------------------------------------------------


def _train(
    params: ModelParams,
    loss_fn: Callable[[Mapping[str, ad.DiffMatrix]], ad.DiffMatrix],
    lr: float,
    epochs: int,
    weight_decay: float,
) -> list[float]:
    """Full-batch Adam on loss_fn(leaves) + weight_decay * sum ||theta||^2.
    Mutates params in place; returns the per-epoch data-loss history."""
    state = AdamState.init(params)
    history = []
    for _ in range(epochs):
        tape = ad.Tape()
        leaves = {k: tape.leaf(v) for k, v in params.items()}
        data_loss = loss_fn(leaves)
        loss = data_loss
        if weight_decay > 0.0:
            loss = ad.add(loss, ad.scale(_l2_penalty(leaves), weight_decay))
        if not np.isfinite(loss.value[0, 0]):
            raise NumericError("training loss became non-finite")
        node_grads = ad.backward(tape, loss)
        grads = {
            name: node_grads.get(leaf.node, np.zeros_like(params[name]))
            for name, leaf in leaves.items()
        }
        adam_step(params, grads, state, lr=lr)
        history.append(float(data_loss.value[0, 0]))
    return history


def _history_metrics(history: list[float]) -> dict[str, float]:
    return {
        "train_loss_first": history[0],
        "train_loss_best": float(np.min(history)),
        "train_loss_final": history[-1],
    }


# ---------------------------------------------------------------------------
# Task: continuous-time dynamics
# ---------------------------------------------------------------------------


def _split_indices(count: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """80/20/20 structure, generalized proportionally: the last sixth of the
    snapshots tests extrapolation; a random sixth of the rest tests
    interpolation; the remainder trains."""
    tail = count // 6
    pool = count - tail
    interp = np.sort(rng.choice(pool, size=tail, replace=False))
    train = np.setdiff1d(np.arange(pool), interp)
    return {
        "train": train,
        "interp": interp,
        "extrap": np.arange(pool, count),
    }


def _continuous_data(plan: ExperimentPlan, seed: int):
    g = make_graph(plan.family, plan.n, seed)
    side = int(round(np.sqrt(plan.n)))
    x0 = default_initial_state(side)
    T = plan.resolved_T()
    times = sample_times("irregular", plan.snapshot_count(), T, seed=[seed, 1])
    truth = simulate_truth(g, DynamicsSpec(plan.law), x0, times)
    split = _split_indices(plan.snapshot_count(), np.random.default_rng([seed, 2]))
    return g, x0, truth, split


def _dynamics_model_spec(plan: ExperimentPlan, train_times: np.ndarray) -> ModelSpec:
    if plan.solver_step is not None:
        step = plan.solver_step
    elif plan.task == "regular":
        step = 1.0
    else:
        # default: a fifth of the mean supervision spacing
        step = float(np.mean(np.diff(train_times))) / 5.0 if len(train_times) > 1 else 0.01
    return ModelSpec(
        variant=plan.variant,
        d_in=1,
        d_hidden=plan.resolved_hidden(),
        d_out=1,
        terminal_T=float(train_times[-1]) if plan.task == "regular" else plan.resolved_T(),
        solver=SolverSpec(method="euler", step=step),
    )


def _continuous_run(plan: ExperimentPlan, run_index: int) -> tuple[dict, ModelParams | None]:
    seed = plan.seed + run_index
    record = {"run": run_index, "seed": seed}
    try:
        g, x0, truth, split = _continuous_data(plan, seed)
        train_times = truth.times[split["train"]]
        train_truth = truth.subset(split["train"])
        spec = _dynamics_model_spec(plan, train_times)
        params = init_params(spec, seed=[seed, 3])

        def loss_fn(leaves):
            pred = ndcn_forward(spec, leaves, g, x0, train_times)
            return l1_loss(pred, train_truth)

        history = _train(params, loss_fn, plan.lr, plan.resolved_epochs(),
                         plan.resolved_weight_decay())
        pred = ndcn_forward(spec, params, g, x0, truth.times)
        metrics = {
            "extrapolation": normalized_l1(pred.subset(split["extrap"]), truth.subset(split["extrap"])),
            "interpolation": normalized_l1(pred.subset(split["interp"]), truth.subset(split["interp"])),
        }
        metrics.update(_history_metrics(history))
        record.update(status="ok", metrics=metrics)
        return record, params
    except (StiffnessError, NumericError, FloatingPointError) as exc:
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return record, None


# ---------------------------------------------------------------------------
# Task: regularly-sampled structured sequences
# ---------------------------------------------------------------------------


def _regular_data(plan: ExperimentPlan, seed: int):
    g = make_graph(plan.family, plan.n, seed)
    side = int(round(np.sqrt(plan.n)))
    x0 = default_initial_state(side)
    T = plan.resolved_T()
    count = plan.snapshot_count()
    sim_times = sample_times("regular", count, T)
    truth = simulate_truth(g, DynamicsSpec(plan.law), x0, sim_times)
    # rescale the inter-sample interval to one time unit
    truth = Trajectory(np.arange(1, count + 1, dtype=float), truth.states)
    n_test = count // 5  # 20 of 100
    return g, x0, truth, count - n_test


def _regular_run(plan: ExperimentPlan, run_index: int) -> tuple[dict, ModelParams | None]:
    seed = plan.seed + run_index
    record = {"run": run_index, "seed": seed}
    try:
        g, x0, truth, n_train = _regular_data(plan, seed)
        states = truth.values()
        if plan.variant in ("rnn_gnn", "gru_gnn", "lstm_gnn"):
            spec = ModelSpec(variant=plan.variant, d_in=1, d_out=1)
            params = init_params(spec, seed=[seed, 3])
            inputs = states[: n_train - 1]
            targets = states[1:n_train]

            def loss_fn(leaves):
                preds = temporal_forward(spec, leaves, g, inputs)
                total = None
                for p, t in zip(preds, targets):
                    term = ad.mean_abs_diff(p, t)
                    total = term if total is None else ad.add(total, term)
                return ad.scale(total, 1.0 / len(targets))

            history = _train(params, loss_fn, plan.lr, plan.resolved_epochs(),
                             plan.resolved_weight_decay())
            rollout = temporal_rollout(spec, params, g, states[:n_train],
                                       len(states) - n_train)
            pred = Trajectory(truth.times[n_train:], rollout)
        else:
            train_times = truth.times[:n_train]
            train_truth = truth.subset(range(n_train))
            spec = _dynamics_model_spec(plan, truth.times)
            params = init_params(spec, seed=[seed, 3])

            def loss_fn(leaves):
                out = ndcn_forward(spec, leaves, g, x0, train_times)
                return l1_loss(out, train_truth)

            history = _train(params, loss_fn, plan.lr, plan.resolved_epochs(),
                             plan.resolved_weight_decay())
            full = ndcn_forward(spec, params, g, x0, truth.times)
            pred = full.subset(range(n_train, len(states)))
        test_truth = truth.subset(range(n_train, len(states)))
        metrics = {"extrapolation": normalized_l1(pred, test_truth)}
        metrics.update(_history_metrics(history))
        record.update(status="ok", metrics=metrics)
        return record, params
    except (StiffnessError, NumericError, FloatingPointError) as exc:
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return record, None


# ---------------------------------------------------------------------------
# Task: semi-supervised node classification
# ---------------------------------------------------------------------------


def _classify_data(plan: ExperimentPlan, seed: int) -> LabeledGraphBundle:
    if plan.dataset == "sbm":
        bundle = gen_sbm_bundle(
            plan.sbm_nodes,
            plan.sbm_blocks,
            plan.sbm_p_in,
            plan.sbm_p_out,
            plan.sbm_noise,
            plan.sbm_label_fraction,
            seed=[seed, 0],
        )
    else:
        bundle = load_bundle(plan.dataset)
    if plan.normalize_features:
        norms = np.abs(bundle.features).sum(axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        bundle = LabeledGraphBundle(
            graph=bundle.graph,
            features=bundle.features / norms,
            labels=bundle.labels,
            train_mask=bundle.train_mask,
            val_mask=bundle.val_mask,
            test_mask=bundle.test_mask,
        )
    return bundle


def _accuracy(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    pred = logits.argmax(axis=1)
    return float((pred[mask] == labels[mask]).mean())


def _train_classifier(plan, bundle, spec, seed) -> ModelParams:
    params = init_params(spec, seed=[seed, 1])
    onehot = bundle.one_hot_labels()

    def loss_fn(leaves):
        logits = classify_forward(spec, leaves, bundle.graph, bundle.features)
        return ad.cross_entropy_masked(logits, onehot, bundle.train_mask)

    _train(params, loss_fn, plan.lr, plan.resolved_epochs(), plan.resolved_weight_decay())
    return params


def _classify_run(plan: ExperimentPlan, run_index: int) -> tuple[dict, ModelParams | None]:
    seed = plan.seed + run_index
    record = {"run": run_index, "seed": seed}
    try:
        bundle = _classify_data(plan, seed)
        grid_T, grid_alpha = plan.resolved_grid()
        best = None  # (val_acc, T, alpha, params)
        # ascending order + strict improvement = ties resolve to the
        # smallest T, then the smallest alpha
        for T in sorted(grid_T):
            for alpha in sorted(grid_alpha):
                spec = ModelSpec(
                    variant="ndcn_classify",
                    d_in=bundle.features.shape[1],
                    d_hidden=plan.resolved_hidden(),
                    d_out=bundle.num_classes,
                    alpha=alpha,
                    terminal_T=T,
                    solver=SolverSpec(method="dopri5", rtol=1e-6, atol=1e-8),
                )
                params = _train_classifier(plan, bundle, spec, seed)
                logits = classify_forward(spec, params, bundle.graph, bundle.features).value
                val_acc = _accuracy(logits, bundle.labels, bundle.val_mask)
                # strict > keeps the smallest (T, alpha) on ties
                if best is None or val_acc > best[0]:
                    test_acc = _accuracy(logits, bundle.labels, bundle.test_mask)
                    best = (val_acc, T, alpha, params, test_acc)
        val_acc, T, alpha, params, test_acc = best
        record.update(
            status="ok",
            metrics={
                "accuracy": test_acc,
                "val_accuracy": val_acc,
                "selected_T": T,
                "selected_alpha": alpha,
            },
        )
        return record, params
    except (StiffnessError, NumericError, FloatingPointError) as exc:
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return record, None


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

_RUNNERS = {
    "continuous": _continuous_run,
    "regular": _regular_run,
    "classify": _classify_run,
}


def _run_one(args: tuple[ExperimentPlan, int]) -> tuple[dict, ModelParams | None]:
    plan, run_index = args
    return _RUNNERS[plan.task](plan, run_index)


def run_plan(plan: ExperimentPlan, jobs: int = 1) -> RunResult:
    plan.validate()
    work = [(plan, i) for i in range(plan.run_count)]
    if jobs > 1 and plan.run_count > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            outcome = list(pool.map(_run_one, work))
    else:
        outcome = [_run_one(w) for w in work]
    runs = [rec for rec, _ in outcome]
    all_params = [p for _, p in outcome]
    total = None
    if plan.task in ("continuous", "regular"):
        spec = _dynamics_model_spec(plan, np.array([0.0, 1.0]))
        total = param_count(spec)
    return RunResult(
        plan=plan,
        runs=runs,
        aggregates=_aggregate_runs(runs),
        failures=sum(1 for r in runs if r["status"] != "ok"),
        param_total=total,
        params=all_params,
    )


def run_continuous(plan: ExperimentPlan, jobs: int = 1) -> RunResult:
    if plan.task != "continuous":
        raise ValueError("plan.task must be 'continuous'")
    return run_plan(plan, jobs)


def run_regular(plan: ExperimentPlan, jobs: int = 1) -> RunResult:
    if plan.task != "regular":
        raise ValueError("plan.task must be 'regular'")
    return run_plan(plan, jobs)


def run_classify(plan: ExperimentPlan, jobs: int = 1) -> RunResult:
    if plan.task != "classify":
        raise ValueError("plan.task must be 'classify'")
    return run_plan(plan, jobs)


# ---------------------------------------------------------------------------
# Checkpoint re-evaluation (used by the CLI `eval` command)
# ---------------------------------------------------------------------------


def evaluate_run(plan: ExperimentPlan, run_index: int, params: ModelParams,
                 selected: Mapping[str, float] | None = None) -> dict[str, float]:
    """Recompute the test metrics for a finished run from its checkpoint;
    regenerates the data deterministically from the plan seed."""
    seed = plan.seed + run_index
    if plan.task == "continuous":
        g, x0, truth, split = _continuous_data(plan, seed)
        spec = _dynamics_model_spec(plan, truth.times[split["train"]])
        pred = ndcn_forward(spec, params, g, x0, truth.times)
        return {
            "extrapolation": normalized_l1(pred.subset(split["extrap"]), truth.subset(split["extrap"])),
            "interpolation": normalized_l1(pred.subset(split["interp"]), truth.subset(split["interp"])),
        }
    if plan.task == "regular":
        g, x0, truth, n_train = _regular_data(plan, seed)
        states = truth.values()
        if plan.variant in ("rnn_gnn", "gru_gnn", "lstm_gnn"):
            spec = ModelSpec(variant=plan.variant, d_in=1, d_out=1)
            rollout = temporal_rollout(spec, params, g, states[:n_train], len(states) - n_train)
            pred = Trajectory(truth.times[n_train:], rollout)
        else:
            spec = _dynamics_model_spec(plan, truth.times)
            pred = ndcn_forward(spec, params, g, x0, truth.times).subset(
                range(n_train, len(states)))
        return {"extrapolation": normalized_l1(pred, truth.subset(range(n_train, len(states))))}
    bundle = _classify_data(plan, seed)
    if selected is None:
        raise ValueError("classify evaluation needs the selected T and alpha")
    spec = ModelSpec(
        variant="ndcn_classify",
        d_in=bundle.features.shape[1],
        d_hidden=plan.resolved_hidden(),
        d_out=bundle.num_classes,
        alpha=float(selected["selected_alpha"]),
        terminal_T=float(selected["selected_T"]),
        solver=SolverSpec(method="dopri5", rtol=1e-6, atol=1e-8),
    )
    logits = classify_forward(spec, params, bundle.graph, bundle.features).value
    return {"accuracy": _accuracy(logits, bundle.labels, bundle.test_mask)}
