"""Input validation helpers shared by the estimator layer and the CLI."""

from __future__ import annotations

import numpy as np

from .graphgen import Graph

__all__ = ["check_graph", "check_times", "check_state_sequence"]


def check_graph(graph) -> Graph:
    if not isinstance(graph, Graph):
        raise TypeError(f"expected an ndcn Graph, got {type(graph).__name__}")
    graph.validate()
    return graph


def check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size == 0:
        raise ValueError("times must be nonempty")
    if t[0] < 0:
        raise ValueError("times must be >= 0")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("times must be strictly increasing")
    return t


def check_state_sequence(y, n: int, length: int | None = None) -> list[np.ndarray]:
    """Coerce to a list of (n, d) float matrices with a common shape."""
    states = [np.asarray(s, dtype=float) for s in y]
    if length is not None and len(states) != length:
        raise ValueError(f"expected {length} states, got {len(states)}")
    if not states:
        raise ValueError("state sequence is empty")
    for s in states:
        if s.ndim != 2 or s.shape[0] != n:
            raise ValueError(f"each state must be ({n}, d), got {s.shape}")
        if s.shape != states[0].shape:
            raise ValueError("all states must share one shape")
        if not np.all(np.isfinite(s)):
            raise ValueError("states must be finite")
    return states
