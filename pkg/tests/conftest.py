"""Shared test helpers: finite-difference oracles and small graphs."""

from __future__ import annotations

import numpy as np

from ndcn import autodiff as ad
from ndcn.graphgen import Graph


def k2() -> Graph:
    return Graph.from_edges(2, [(0, 1)])


def k3() -> Graph:
    return Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])


def two_triangles() -> Graph:
    return Graph.from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def taped_loss_and_grads(loss_fn, params):
    """Run loss_fn over tape leaves for params; return (loss, grads by name)."""
    tape = ad.Tape()
    leaves = {k: tape.leaf(v) for k, v in params.items()}
    loss = loss_fn(leaves)
    node_grads = ad.backward(tape, loss)
    grads = {
        name: node_grads.get(leaf.node, np.zeros_like(params[name]))
        for name, leaf in leaves.items()
    }
    return float(loss.value[0, 0]), grads


def fd_gradients(loss_fn, params, h=1e-5):
    """Central finite differences of a scalar loss over every parameter
    entry. loss_fn maps a plain {name: array} dict to a float."""
    out = {}
    for name, base in params.items():
        grad = np.zeros_like(base)
        for idx in np.ndindex(*base.shape):
            bumped = {k: v.copy() for k, v in params.items()}
            bumped[name][idx] += h
            up = loss_fn(bumped)
            bumped[name][idx] -= 2 * h
            down = loss_fn(bumped)
            grad[idx] = (up - down) / (2 * h)
        out[name] = grad
    return out


def max_rel_err(analytic, numeric, floor=1e-8) -> float:
    worst = 0.0
    for name in analytic:
        a, n = analytic[name], numeric[name]
        denom = np.maximum(np.abs(n), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
