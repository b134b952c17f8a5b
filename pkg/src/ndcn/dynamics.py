"""Ground-truth network dynamics: heat diffusion, mutualistic interaction,
gene regulation; plus the canonical initial state and trajectory generation.

Vector forms (per node i, elementwise over state dimensions):

  heat         x_i' = -k * sum_j A_ij (x_i - x_j)
  mutualistic  x_i' = b + x_i (1 - x_i/k)(x_i/c - 1)
                      + sum_j A_ij x_i x_j / (d + e x_i + h x_j)
  gene         x_i' = -b x_i^f + sum_j A_ij x_j^h / (x_j^h + 1)

Default constants: heat k=1; mutualistic b=0.1, k=5, c=1, d=5, e=0.9, h=0.1;
gene b=1, f=1, h=2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import IO, Callable, Mapping

import numpy as np

from .errors import DegenerateInputError
from .graphgen import Graph, SeedLike, _rng
from .odeint import SolverSpec, Trajectory, solve

__all__ = [
    "DynamicsSpec",
    "heat_rhs",
    "mutualistic_rhs",
    "gene_rhs",
    "default_initial_state",
    "simulate_truth",
    "sample_times",
    "write_trajectory_csv",
    "DEFAULT_CONSTANTS",
]

logger = logging.getLogger(__name__)

LAWS = ("heat", "mutualistic", "gene")

DEFAULT_CONSTANTS: dict[str, dict[str, float]] = {
    "heat": {"k": 1.0},
    "mutualistic": {"b": 0.1, "k": 5.0, "c": 1.0, "d": 5.0, "e": 0.9, "h": 0.1},
    "gene": {"b": 1.0, "f": 1.0, "h": 2.0},
}


@dataclass(frozen=True)
class DynamicsSpec:
    """A dynamic law plus its named constants."""

    law: str
    consts: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValueError(f"unknown law {self.law!r}, expected one of {LAWS}")
        merged = dict(DEFAULT_CONSTANTS[self.law])
        unknown = set(self.consts) - set(merged)
        if unknown:
            raise ValueError(f"unknown constants for {self.law}: {sorted(unknown)}")
        merged.update(self.consts)
        if not all(np.isfinite(v) for v in merged.values()):
            raise ValueError("constants must be finite")
        if self.law == "gene" and merged["f"] not in (1.0, 2.0):
            raise ValueError(f"gene exponent f must be 1 or 2, got {merged['f']}")
        object.__setattr__(self, "consts", merged)

    def rhs(self, g: Graph) -> Callable[[float, np.ndarray], np.ndarray]:
        c = self.consts
        if self.law == "heat":
            return lambda t, x: heat_rhs(g, x, k=c["k"])
        if self.law == "mutualistic":
            return lambda t, x: mutualistic_rhs(g, x, **c)
        return lambda t, x: gene_rhs(g, x, **c)


def _check_state(g: Graph, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != g.n:
        raise ValueError(f"state must be ({g.n}, d), got {x.shape}")
    return x


def heat_rhs(g: Graph, x: np.ndarray, k: float = 1.0) -> np.ndarray:
    """Newton's-law-of-cooling flow -k (D - A) x. Pairwise terms are
    antisymmetric, so the total over nodes is conserved."""
    x = _check_state(g, x)
    if not k > 0:
        raise ValueError(f"heat coefficient k must be positive, got {k}")
    if g.num_edges == 0:
        return np.zeros_like(x)
    u, v = g.oriented_edges()
    out = np.zeros_like(x)
    flow = x[v] - x[u]  # (2m, d)
    np.add.at(out, u, flow)
    return k * out


def mutualistic_rhs(
    g: Graph,
    x: np.ndarray,
    b: float = 0.1,
    k: float = 5.0,
    c: float = 1.0,
    d: float = 5.0,
    e: float = 0.9,
    h: float = 0.1,
) -> np.ndarray:
    """Species-abundance dynamics: migration b, logistic growth with
    capacity k, Allee threshold c, and saturating pairwise mutualism."""
    x = _check_state(g, x)
    out = b + x * (1.0 - x / k) * (x / c - 1.0)
    if g.num_edges:
        u, v = g.oriented_edges()
        denom = d + e * x[u] + h * x[v]
        if np.any(np.abs(denom) < 1e-12):
            raise DegenerateInputError("mutualistic interaction denominator is zero")
        inter = x[u] * x[v] / denom
        acc = np.zeros_like(x)
        np.add.at(acc, u, inter)
        out = out + acc
    return out


def gene_rhs(
    g: Graph,
    x: np.ndarray,
    b: float = 1.0,
    f: float = 1.0,
    h: float = 2.0,
) -> np.ndarray:
    """Michaelis-Menten regulation: degradation (f=1) or dimerization (f=2)
    plus Hill-saturated activation from neighbors.

    Ground truth never leaves x >= 0 from the canonical initial state; if a
    learned vector field queries negative states the Hill term falls back to
    |x|^h (with a warning) so training stays finite.
    """
    x = _check_state(g, x)
    if float(f) not in (1.0, 2.0):
        if np.any(x < 0):
            raise DegenerateInputError("negative state with non-integer exponent")
        decay = -b * np.power(x, f)
    else:
        decay = -b * (x if f == 1.0 else x * x)
    out = decay
    if g.num_edges:
        xs = x
        if np.any(x < 0):
            logger.warning("gene_rhs saw negative states; Hill term uses |x|")
            xs = np.abs(x)
        xh = np.power(xs, h)
        act = xh / (xh + 1.0)
        u, v = g.oriented_edges()
        acc = np.zeros_like(x)
        np.add.at(acc, u, act[v])
        out = out + acc
    return out


def default_initial_state(grid_side: int) -> np.ndarray:
    """Canonical X(0): three constant blocks laid on the N x N grid ordering
    (row-major), zero elsewhere. Shared by all experiments so differences in
    trajectories come only from the law and the network."""
    N = int(grid_side)
    if N < 4:
        raise ValueError(f"grid side must be >= 4, got {N}")
    x0 = np.zeros((N, N))
    a, b = int(0.05 * N), int(0.25 * N)
    x0[a:b, a:b] = 25.0
    c, d = int(0.45 * N), int(0.75 * N)
    x0[c:d, c:d] = 20.0
    e, f = int(0.35 * N), int(0.65 * N)
    x0[a:b, e:f] = 17.0
    return x0.reshape(N * N, 1)


def simulate_truth(
    g: Graph,
    spec: DynamicsSpec,
    x0: np.ndarray,
    times,
    rtol: float = 1e-7,
    atol: float = 1e-9,
) -> Trajectory:
    """Integrate the law from x(0)=x0 with adaptive DOPRI5 and report states
    at exactly the requested times."""
    x0 = _check_state(g, x0)
    solver = SolverSpec(method="dopri5", rtol=rtol, atol=atol)
    return solve(spec.rhs(g), x0, times, solver)


def sample_times(mode: str, count: int, T: float, seed: SeedLike = 0) -> np.ndarray:
    """Snapshot times in (0, T].

    irregular: sorted i.i.d. uniform draws (deduplicated by redraw);
    regular: the even grid T/count, 2T/count, ..., T.
    """
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    if mode == "regular":
        return np.arange(1, count + 1) * (T / count)
    if mode != "irregular":
        raise ValueError(f"mode must be 'irregular' or 'regular', got {mode!r}")
    rng = _rng(seed)
    draws = T - rng.random(count) * T  # uniform in (0, T]
    uniq = np.unique(draws)
    while uniq.shape[0] < count:
        extra = T - rng.random(count - uniq.shape[0]) * T
        uniq = np.unique(np.concatenate([uniq, extra]))
    return uniq


def write_trajectory_csv(traj: Trajectory, fh: IO[str]) -> None:
    """One row per (time, node, dim): header ``t,node,dim,value``."""
    fh.write("t,node,dim,value\n")
    for t, state in zip(traj.times, traj.values()):
        for node in range(state.shape[0]):
            for dim in range(state.shape[1]):
                fh.write(f"{float(t)!r},{node},{dim},{float(state[node, dim])!r}\n")
