"""Learnable architectures: the graph-ODE model (ndcn) with its three
ablations, three temporal-GNN baselines, and the node-classification variant.

All forwards run on :mod:`ndcn.autodiff` matrices, so passing tape leaves as
parameters yields a differentiable computation while passing plain arrays
(or constants) gives a cheap evaluation pass. States are node-major
(n, d) matrices; biases are 1 x d rows broadcast over nodes.

Variants
--------
ndcn           encode -> graph ODE relu(Phi X W + b) -> decode
no_encode      the ODE alone, in the original signal space
no_graph       encode/decode kept, Phi dropped: relu(X W + b)
no_control     encode/decode kept, W and b dropped: relu(Phi X)
rnn_gnn        x_t = relu(Phi X[t] W_e + b_e), tanh recurrence, linear readout
gru_gnn        same extractor, GRU cell
lstm_gnn       same extractor, LSTM cell
ndcn_classify  one-layer tanh encoder, parameter-free flow relu(Phi X),
               linear decode to class logits (softmax lives in the loss)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import BinaryIO, Mapping, Sequence

import numpy as np

from . import autodiff as ad
from .errors import FormatError
from .graphgen import Graph, SeedLike, _rng
from .odeint import SolverSpec, Trajectory, solve
from .operators import DiffOp, normalized_laplacian, tunable_diffusion

__all__ = [
    "VARIANTS",
    "ModelSpec",
    "init_params",
    "param_count",
    "param_shapes",
    "ndcn_forward",
    "temporal_forward",
    "temporal_rollout",
    "classify_forward",
    "save_params",
    "load_params",
]

VARIANTS = (
    "ndcn",
    "no_encode",
    "no_graph",
    "no_control",
    "rnn_gnn",
    "gru_gnn",
    "lstm_gnn",
    "ndcn_classify",
)

_TEMPORAL = ("rnn_gnn", "gru_gnn", "lstm_gnn")


@dataclass(frozen=True)
class ModelSpec:
    variant: str = "ndcn"
    d_in: int = 1
    d_hidden: int = 20
    d_out: int = 1
    alpha: float = 0.0  # operator mix, classification variant only
    terminal_T: float = 5.0
    solver: SolverSpec = field(default_factory=SolverSpec)
    gcn_hidden: int = 5  # temporal variants
    rnn_hidden: int = 10

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        for name in ("d_in", "d_hidden", "d_out", "gcn_hidden", "rnn_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.variant == "ndcn_classify" and not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")

    def with_solver(self, solver: SolverSpec) -> "ModelSpec":
        return replace(self, solver=solver)


ModelParams = dict[str, np.ndarray]


def param_shapes(spec: ModelSpec) -> dict[str, tuple[int, int]]:
    """Named parameter shapes, in creation order."""
    d, dh, do = spec.d_in, spec.d_hidden, spec.d_out
    v = spec.variant
    if v in ("ndcn", "no_graph", "no_control"):
        shapes = {
            "W_e": (d, dh), "b_e": (1, dh),
            "W_0": (dh, dh), "b_0": (1, dh),
            "W": (dh, dh), "b": (1, dh),
            "W_d": (dh, do), "b_d": (1, do),
        }
        if v == "no_control":
            del shapes["W"], shapes["b"]
        return shapes
    if v == "no_encode":
        return {"W": (d, d), "b": (1, d)}
    if v == "ndcn_classify":
        return {"W_e": (d, dh), "b_e": (1, dh), "W_d": (dh, do), "b_d": (1, do)}
    gh, rh = spec.gcn_hidden, spec.rnn_hidden
    shapes = {"W_e": (d, gh), "b_e": (1, gh)}
    gates = {"rnn_gnn": ("h",), "gru_gnn": ("r", "z", "n"), "lstm_gnn": ("i", "f", "g", "o")}[v]
    for gate in gates:
        shapes[f"W_i{gate}"] = (gh, rh)
        shapes[f"b_i{gate}"] = (1, rh)
        shapes[f"W_h{gate}"] = (rh, rh)
        shapes[f"b_h{gate}"] = (1, rh)
    shapes["W_d"] = (rh, do)
    shapes["b_d"] = (1, do)
    return shapes


def param_count(spec: ModelSpec) -> int:
    return sum(r * c for r, c in param_shapes(spec).values())


def init_params(spec: ModelSpec, seed: SeedLike = 0) -> ModelParams:
    """Glorot-uniform weights, zero biases; deterministic per seed."""
    rng = _rng(seed)
    params: ModelParams = {}
    for name, (rows, cols) in param_shapes(spec).items():
        if name.startswith("b"):
            params[name] = np.zeros((rows, cols))
        else:
            s = np.sqrt(6.0 / (rows + cols))
            params[name] = rng.uniform(-s, s, size=(rows, cols))
    return params


def _p(params: Mapping[str, object], name: str) -> ad.DiffMatrix:
    v = params[name]
    return v if isinstance(v, ad.DiffMatrix) else ad.constant(v)


# ---------------------------------------------------------------------------
# Continuous-time model
# ---------------------------------------------------------------------------


def _affine(x, w, b):
    return ad.add_row_bias(ad.matmul(x, w), b)


def ndcn_forward(
    spec: ModelSpec,
    params: Mapping[str, object],
    g: Graph,
    x0,
    query_times,
) -> Trajectory:
    """Encode x0, integrate the hidden flow with the spec's solver, and
    decode every queried hidden state. Differentiable when ``params`` holds
    tape leaves."""
    if spec.variant not in ("ndcn", "no_encode", "no_graph", "no_control"):
        raise ValueError(f"{spec.variant!r} is not a continuous-time variant")
    times = np.asarray(query_times, dtype=float)
    if times.size and times[-1] > spec.terminal_T + 1e-12:
        raise ValueError(
            f"query time {times[-1]} exceeds terminal_T={spec.terminal_T}"
        )
    x0 = ad.constant(np.asarray(x0, dtype=float))
    if x0.shape != (g.n, spec.d_in):
        raise ValueError(f"x0 must be ({g.n}, {spec.d_in}), got {x0.shape}")

    if spec.variant == "no_encode":
        h0 = x0
    else:
        h0 = _affine(ad.tanh(_affine(x0, _p(params, "W_e"), _p(params, "b_e"))),
                     _p(params, "W_0"), _p(params, "b_0"))

    phi = None if spec.variant == "no_graph" else normalized_laplacian(g)

    if spec.variant == "no_control":
        def rhs(t, h):
            return ad.relu(ad.sparse_apply(phi, h))
    elif spec.variant == "no_graph":
        w, b = _p(params, "W"), _p(params, "b")

        def rhs(t, h):
            return ad.relu(_affine(h, w, b))
    else:
        w, b = _p(params, "W"), _p(params, "b")

        def rhs(t, h):
            return ad.relu(_affine(ad.sparse_apply(phi, h), w, b))

    hidden = solve(rhs, h0, times, spec.solver)
    if spec.variant == "no_encode":
        return hidden
    wd, bd = _p(params, "W_d"), _p(params, "b_d")
    decoded = [_affine(h, wd, bd) for h in hidden.states]
    return Trajectory(hidden.times, decoded)


# ---------------------------------------------------------------------------
# Temporal-GNN baselines
# ---------------------------------------------------------------------------


def _gcn_extract(params, phi: DiffOp, x) -> ad.DiffMatrix:
    return ad.relu(_affine(ad.sparse_apply(phi, x), _p(params, "W_e"), _p(params, "b_e")))


def _cell_step(spec: ModelSpec, params, x_t, state):
    """One recurrent update; state is (h,) or (h, c) for the LSTM."""
    def gate(prefix, h_prev, act):
        pre = ad.add(
            _affine(x_t, _p(params, f"W_i{prefix}"), _p(params, f"b_i{prefix}")),
            _affine(h_prev, _p(params, f"W_h{prefix}"), _p(params, f"b_h{prefix}")),
        )
        return act(pre)

    if spec.variant == "rnn_gnn":
        (h,) = state
        return (gate("h", h, ad.tanh),)
    if spec.variant == "gru_gnn":
        (h,) = state
        r = gate("r", h, ad.sigmoid)
        z = gate("z", h, ad.sigmoid)
        n_pre = ad.add(
            _affine(x_t, _p(params, "W_in"), _p(params, "b_in")),
            ad.mul_elementwise(
                r, _affine(h, _p(params, "W_hn"), _p(params, "b_hn"))
            ),
        )
        n = ad.tanh(n_pre)
        ones = ad.constant(np.ones(z.shape))
        h_new = ad.add(ad.mul_elementwise(ad.sub(ones, z), n), ad.mul_elementwise(z, h))
        return (h_new,)
    # lstm_gnn
    h, c = state
    i = gate("i", h, ad.sigmoid)
    f = gate("f", h, ad.sigmoid)
    gg = gate("g", h, ad.tanh)
    o = gate("o", h, ad.sigmoid)
    c_new = ad.add(ad.mul_elementwise(f, c), ad.mul_elementwise(i, gg))
    h_new = ad.mul_elementwise(o, ad.tanh(c_new))
    return (h_new, c_new)


def _zero_state(spec: ModelSpec, n: int):
    zeros = ad.constant(np.zeros((n, spec.rnn_hidden)))
    return (zeros, zeros) if spec.variant == "lstm_gnn" else (zeros,)


def temporal_forward(
    spec: ModelSpec,
    params: Mapping[str, object],
    g: Graph,
    x_seq: Sequence,
) -> list:
    """Teacher-forced pass: for each input X[t], predict X[t+1]."""
    if spec.variant not in _TEMPORAL:
        raise ValueError(f"{spec.variant!r} is not a temporal variant")
    if len(x_seq) == 0:
        raise ValueError("input sequence is empty")
    phi = tunable_diffusion(g, 0.5)
    state = _zero_state(spec, g.n)
    preds = []
    for x in x_seq:
        if not isinstance(x, ad.DiffMatrix):
            x = ad.constant(np.asarray(x, dtype=float))
        x_t = _gcn_extract(params, phi, x)
        state = _cell_step(spec, params, x_t, state)
        preds.append(_affine(state[0], _p(params, "W_d"), _p(params, "b_d")))
    return preds


def temporal_rollout(
    spec: ModelSpec,
    params: Mapping[str, object],
    g: Graph,
    warmup_seq: Sequence[np.ndarray],
    steps: int,
) -> list[np.ndarray]:
    """Prime the recurrence on ground-truth inputs, then predict ``steps``
    states closed-loop, feeding each prediction back as the next input."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    phi = tunable_diffusion(g, 0.5)
    state = _zero_state(spec, g.n)
    pred = None
    for x in warmup_seq:
        x_t = _gcn_extract(params, phi, ad.constant(np.asarray(x, dtype=float)))
        state = _cell_step(spec, params, x_t, state)
        pred = _affine(state[0], _p(params, "W_d"), _p(params, "b_d"))
    if pred is None:
        raise ValueError("warmup sequence is empty")
    out = [pred.value]
    for _ in range(steps - 1):
        x_t = _gcn_extract(params, phi, ad.constant(out[-1]))
        state = _cell_step(spec, params, x_t, state)
        out.append(_affine(state[0], _p(params, "W_d"), _p(params, "b_d")).value)
    return out


# ---------------------------------------------------------------------------
# Classification variant
# ---------------------------------------------------------------------------


def classify_forward(
    spec: ModelSpec,
    params: Mapping[str, object],
    g: Graph,
    x0,
) -> ad.DiffMatrix:
    """Logits at the terminal time: one-layer tanh encoder, parameter-free
    flow relu(Phi X) under the tunable operator, integrated by DOPRI5 over
    16 evenly spaced ticks in [0, T], linear decode of the final state."""
    if spec.variant != "ndcn_classify":
        raise ValueError(f"{spec.variant!r} is not the classification variant")
    if not spec.terminal_T > 0:
        raise ValueError("terminal_T must be positive")
    x0 = ad.constant(np.asarray(x0, dtype=float))
    h0 = ad.tanh(_affine(x0, _p(params, "W_e"), _p(params, "b_e")))
    phi = tunable_diffusion(g, spec.alpha)

    def rhs(t, h):
        return ad.relu(ad.sparse_apply(phi, h))

    ticks = np.linspace(0.0, spec.terminal_T, 16)
    traj = solve(rhs, h0, ticks, spec.solver)
    return _affine(traj.states[-1], _p(params, "W_d"), _p(params, "b_d"))


# ---------------------------------------------------------------------------
# Checkpoint IO: named-matrix container, documented in the README
# ---------------------------------------------------------------------------

_MAGIC = b"NDCNPAR1"


def save_params(params: ModelParams, fh: BinaryIO) -> None:
    fh.write(_MAGIC)
    fh.write(struct.pack("<I", len(params)))
    for name, mat in params.items():
        raw = name.encode("utf-8")
        mat = np.ascontiguousarray(mat, dtype="<f8")
        fh.write(struct.pack("<H", len(raw)))
        fh.write(raw)
        fh.write(struct.pack("<B", mat.ndim))
        fh.write(struct.pack(f"<{mat.ndim}Q", *mat.shape))
        fh.write(mat.tobytes(order="C"))


def load_params(fh: BinaryIO) -> ModelParams:
    if fh.read(len(_MAGIC)) != _MAGIC:
        raise FormatError("not a parameter checkpoint (bad magic)")
    (count,) = struct.unpack("<I", fh.read(4))
    params: ModelParams = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", fh.read(2))
        name = fh.read(nlen).decode("utf-8")
        (ndim,) = struct.unpack("<B", fh.read(1))
        shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
        size = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(fh.read(8 * size), dtype="<f8").reshape(shape)
        params[name] = data.astype(float)
    return params
