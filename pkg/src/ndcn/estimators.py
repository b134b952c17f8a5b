"""Scikit-learn style estimators wrapping the graph-ODE models.

These give the fit/predict surface (with ``get_params``/``set_params`` from
``BaseEstimator``) so the models compose with the wider ecosystem; the
training protocols in :mod:`ndcn.training` use the functional core directly.
The graph is a structural hyperparameter and is passed at construction.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from . import autodiff as ad
from .models import ModelSpec, classify_forward, init_params, ndcn_forward, temporal_forward, temporal_rollout
from .odeint import SolverSpec, Trajectory
from .training import _train, l1_loss, normalized_l1
from .validation import check_graph, check_state_sequence, check_times

__all__ = [
    "NetworkDynamicsRegressor",
    "TemporalGraphForecaster",
    "GraphODEClassifier",
]


class NetworkDynamicsRegressor(BaseEstimator):
    """Continuous-time dynamics learner: fit on (times, states) snapshots of
    a system on ``graph``, then predict the state at arbitrary times.

    Parameters
    ----------
    graph : ndcn.Graph
    variant : "ndcn", "no_encode", "no_graph" or "no_control"
    hidden_dim : width of the hidden flow
    initial_state : known system state X(0) at t=0; may be omitted when the
        fitted times include t=0 (the first snapshot is used)
    terminal_time : largest queryable time; defaults to the last fitted time
    solver_step : Euler step of the forward integration; defaults to a fifth
        of the mean supervision spacing
    """

    def __init__(self, graph=None, variant="ndcn", hidden_dim=20,
                 initial_state=None, terminal_time=None, lr=0.01, epochs=2000,
                 weight_decay=0.0, solver_step=None, seed=0):
        self.graph = graph
        self.variant = variant
        self.hidden_dim = hidden_dim
        self.initial_state = initial_state
        self.terminal_time = terminal_time
        self.lr = lr
        self.epochs = epochs
        self.weight_decay = weight_decay
        self.solver_step = solver_step
        self.seed = seed

    def fit(self, X, y):
        g = check_graph(self.graph)
        times = check_times(X)
        states = check_state_sequence(y, g.n, length=times.size)
        d = states[0].shape[1]
        if self.solver_step is not None:
            step = self.solver_step
        else:
            step = float(np.mean(np.diff(times))) / 5.0 if times.size > 1 else 0.01
        T = self.terminal_time if self.terminal_time is not None else float(times[-1])
        self.spec_ = ModelSpec(
            variant=self.variant, d_in=d, d_hidden=self.hidden_dim, d_out=d,
            terminal_T=T, solver=SolverSpec(method="euler", step=step),
        )
        fit_times = times
        truth = Trajectory(times, states)
        if self.initial_state is not None:
            self.x0_ = np.asarray(self.initial_state, dtype=float)
            if self.x0_.shape != states[0].shape:
                raise ValueError("initial_state must match the snapshot shape")
        elif times[0] == 0.0:
            # t=0 pins the initial state; supervise the remaining snapshots
            self.x0_ = states[0]
            fit_times = times[1:]
            truth = truth.subset(range(1, times.size))
        else:
            raise ValueError(
                "provide initial_state= or include the t=0 snapshot in the fit"
            )
        params = init_params(self.spec_, seed=self.seed)

        def loss_fn(leaves):
            pred = ndcn_forward(self.spec_, leaves, g, self.x0_, fit_times)
            return l1_loss(pred, truth)

        self.history_ = _train(params, loss_fn, self.lr, self.epochs, self.weight_decay)
        self.params_ = params
        return self

    def predict(self, X):
        self._check_fitted()
        times = check_times(X)
        traj = ndcn_forward(self.spec_, self.params_, self.graph, self.x0_, times)
        return traj.as_array()

    def score(self, X, y):
        """Negative normalized l1 error (higher is better)."""
        self._check_fitted()
        times = check_times(X)
        states = check_state_sequence(y, self.graph.n, length=times.size)
        pred = ndcn_forward(self.spec_, self.params_, self.graph, self.x0_, times)
        return -normalized_l1(pred, Trajectory(times, states))

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit first")


class TemporalGraphForecaster(BaseEstimator):
    """Next-step forecaster for regularly sampled graph-state sequences,
    using a GCN feature extractor with an RNN/GRU/LSTM cell."""

    def __init__(self, graph=None, variant="gru_gnn", lr=0.01, epochs=500,
                 weight_decay=1e-3, seed=0):
        self.graph = graph
        self.variant = variant
        self.lr = lr
        self.epochs = epochs
        self.weight_decay = weight_decay
        self.seed = seed

    def fit(self, X, y=None):
        """X is the full training sequence (length T, each (n, d)); the model
        learns to map X[t] to X[t+1]."""
        g = check_graph(self.graph)
        seq = check_state_sequence(X, g.n)
        if len(seq) < 2:
            raise ValueError("need at least two snapshots to learn a step")
        d = seq[0].shape[1]
        self.spec_ = ModelSpec(variant=self.variant, d_in=d, d_out=d)
        params = init_params(self.spec_, seed=self.seed)
        inputs, targets = seq[:-1], seq[1:]

        def loss_fn(leaves):
            preds = temporal_forward(self.spec_, leaves, g, inputs)
            total = None
            for p, t in zip(preds, targets):
                term = ad.mean_abs_diff(p, t)
                total = term if total is None else ad.add(total, term)
            return ad.scale(total, 1.0 / len(targets))

        self.history_ = _train(params, loss_fn, self.lr, self.epochs, self.weight_decay)
        self.params_ = params
        self.warmup_ = seq
        return self

    def predict(self, X):
        """Teacher-forced one-step-ahead predictions for the inputs X."""
        self._check_fitted()
        seq = check_state_sequence(X, self.graph.n)
        preds = temporal_forward(self.spec_, self.params_, self.graph, seq)
        return np.stack([p.value for p in preds], axis=0)

    def forecast(self, steps: int):
        """Closed-loop continuation of the fitted sequence."""
        self._check_fitted()
        out = temporal_rollout(self.spec_, self.params_, self.graph, self.warmup_, steps)
        return np.stack(out, axis=0)

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit first")


class GraphODEClassifier(BaseEstimator, ClassifierMixin):
    """Semi-supervised node classifier: diffuse encoded features along the
    graph for a real-valued time T, then decode class logits.

    ``fit(X, y)`` follows the semi-supervised convention that ``y == -1``
    marks unlabeled nodes; those rows contribute no training signal.
    """

    def __init__(self, graph=None, hidden_dim=256, alpha=0.0, terminal_time=1.2,
                 lr=0.01, epochs=100, weight_decay=0.024, seed=0):
        self.graph = graph
        self.hidden_dim = hidden_dim
        self.alpha = alpha
        self.terminal_time = terminal_time
        self.lr = lr
        self.epochs = epochs
        self.weight_decay = weight_decay
        self.seed = seed

    def fit(self, X, y):
        g = check_graph(self.graph)
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64).reshape(-1)
        if X.ndim != 2 or X.shape[0] != g.n or y.shape[0] != g.n:
            raise ValueError(f"X must be ({g.n}, D) and y ({g.n},)")
        mask = y >= 0
        if not mask.any():
            raise ValueError("no labeled nodes (all y are -1)")
        self.classes_ = np.unique(y[mask])
        c = int(self.classes_.max()) + 1
        onehot = np.zeros((g.n, c))
        onehot[np.flatnonzero(mask), y[mask]] = 1.0
        self.spec_ = ModelSpec(
            variant="ndcn_classify", d_in=X.shape[1], d_hidden=self.hidden_dim,
            d_out=c, alpha=self.alpha, terminal_T=self.terminal_time,
            solver=SolverSpec(method="dopri5", rtol=1e-6, atol=1e-8),
        )
        params = init_params(self.spec_, seed=self.seed)

        def loss_fn(leaves):
            logits = classify_forward(self.spec_, leaves, g, X)
            return ad.cross_entropy_masked(logits, onehot, mask)

        self.history_ = _train(params, loss_fn, self.lr, self.epochs, self.weight_decay)
        self.params_ = params
        return self

    def decision_function(self, X):
        self._check_fitted()
        X = np.asarray(X, dtype=float)
        return classify_forward(self.spec_, self.params_, self.graph, X).value

    def predict_proba(self, X):
        logits = self.decision_function(X)
        shifted = logits - logits.max(axis=1, keepdims=True)
        expd = np.exp(shifted)
        return expd / expd.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.decision_function(X).argmax(axis=1)

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit first")
