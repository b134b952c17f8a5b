"""Initial-value-problem solvers shared by ground-truth simulation and model
forward passes.

Three methods: fixed-step Euler and classic RK4, and the adaptive
Dormand-Prince 5(4) pair (DOPRI5) with the standard 4th-order dense-output
interpolant. The fixed-step methods march from t=0 and shorten the final
sub-step between consecutive query times so the solution lands exactly on
every supervision time. The solvers are algebra-generic: the state may be a
numpy array or any object supporting ``+`` and scalar ``*`` (in particular
the taped matrices from :mod:`ndcn.autodiff`), so gradients can flow through
the recorded solver arithmetic.

DOPRI5 coefficients follow Dormand & Prince (1980); error control uses an
RMS norm of ``err / (atol + rtol * max(|y|, |y_new|))`` with step factor
``0.9 * norm**(-1/5)`` clipped to [0.2, 5].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import StiffnessError

__all__ = ["SolverSpec", "Trajectory", "solve", "order_check", "exp_decay_problem"]

_METHODS = ("euler", "rk4", "dopri5")


@dataclass(frozen=True)
class SolverSpec:
    method: str = "dopri5"
    step: float = 0.01
    rtol: float = 1e-7
    atol: float = 1e-9
    max_steps: int = 100_000

    def validate(self) -> None:
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {_METHODS}")
        if self.method in ("euler", "rk4") and not self.step > 0:
            raise ValueError(f"fixed-step method needs step > 0, got {self.step}")
        if self.method == "dopri5" and not (self.rtol > 0 and self.atol > 0):
            raise ValueError("adaptive method needs rtol > 0 and atol > 0")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class Trajectory:
    """Time stamps paired with one state per stamp.

    States are numpy arrays for plain solves and taped matrices for
    differentiable solves; :meth:`values` always gives numpy arrays.
    """

    times: np.ndarray
    states: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.states) != self.times.shape[0]:
            raise ValueError("times and states must have equal length")
        if self.times.shape[0] > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def values(self) -> list[np.ndarray]:
        return [getattr(s, "value", s) for s in self.states]

    def as_array(self) -> np.ndarray:
        """Stack to (num_times, n, d)."""
        return np.stack(self.values(), axis=0)

    def subset(self, indices: Sequence[int]) -> "Trajectory":
        idx = list(indices)
        return Trajectory(self.times[idx], [self.states[i] for i in idx])


def _vals(x: Any) -> np.ndarray:
    # taped matrices expose .value; plain arrays pass through
    return np.asarray(getattr(x, "value", x), dtype=float)


def _check_query_times(query_times: np.ndarray) -> np.ndarray:
    t = np.asarray(query_times, dtype=float)
    if t.ndim != 1 or t.shape[0] == 0:
        raise ValueError("query_times must be a nonempty 1-D array")
    if t[0] < 0:
        raise ValueError("query times must be >= 0")
    if t.shape[0] > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("query times must be strictly increasing")
    return t


def solve(rhs: Callable[[float, Any], Any], x0: Any, query_times, spec: SolverSpec) -> Trajectory:
    """Integrate ``x' = rhs(t, x)`` from ``x(0) = x0`` and report the states
    at exactly the requested times."""
    spec.validate()
    t = _check_query_times(query_times)
    if spec.method == "euler":
        states = _fixed_step(rhs, x0, t, spec, _euler_step)
    elif spec.method == "rk4":
        states = _fixed_step(rhs, x0, t, spec, _rk4_step)
    else:
        states = _dopri5(rhs, x0, t, spec)
    return Trajectory(t.copy(), states)


# ---------------------------------------------------------------------------
# Fixed-step methods
# ---------------------------------------------------------------------------


def _euler_step(rhs, t, x, h):
    return x + h * rhs(t, x)


def _rk4_step(rhs, t, x, h):
    k1 = rhs(t, x)
    k2 = rhs(t + 0.5 * h, x + (0.5 * h) * k1)
    k3 = rhs(t + 0.5 * h, x + (0.5 * h) * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _fixed_step(rhs, x0, query_times, spec, step_fn):
    states = []
    taken = 0
    t_cur = 0.0
    x = x0
    for tq in query_times:
        if tq == 0.0:
            states.append(x)
            continue
        span = tq - t_cur
        nsteps = max(1, int(np.ceil(span / spec.step - 1e-12)))
        for k in range(nsteps):
            # equal steps except the last one, shortened to land on tq
            h = spec.step if k < nsteps - 1 else tq - (t_cur + (nsteps - 1) * spec.step)
            x = step_fn(rhs, t_cur + k * spec.step, x, h)
            taken += 1
            if taken > spec.max_steps:
                raise StiffnessError(f"exceeded max_steps={spec.max_steps}", t=float(tq))
        t_cur = float(tq)
        states.append(x)
    return states


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)
# ---------------------------------------------------------------------------

_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
# b5 - b4: local truncation error estimate weights
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# dense-output weights (Hairer, Norsett & Wanner, DOPRI5 listing)
_D = (
    -12715105075 / 11282082432,
    0.0,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)


def _combine(base, h, coeffs, ks):
    """base + h * sum(c_i * k_i), skipping zero coefficients."""
    acc = base
    for c, k in zip(coeffs, ks):
        if c != 0.0:
            acc = acc + (h * c) * k
    return acc


def _error_norm(err: np.ndarray, y: np.ndarray, y_new: np.ndarray, spec: SolverSpec) -> float:
    scale = spec.atol + spec.rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(rhs, x0, f0, t_end, spec):
    # standard two-trial heuristic (Hairer sec. II.4), on plain values
    y0 = _vals(x0)
    scale = spec.atol + spec.rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((_vals(f0) / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_end)
    x1 = x0 + h0 * f0
    f1 = rhs(h0, x1)
    d2 = np.sqrt(np.mean(((_vals(f1) - _vals(f0)) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_end)


def _dopri5(rhs, x0, query_times, spec):
    t_end = float(query_times[-1])
    states: list = []
    qi = 0
    while qi < len(query_times) and query_times[qi] == 0.0:
        states.append(x0)
        qi += 1
    if qi == len(query_times):
        return states

    t = 0.0
    y = x0
    k1 = rhs(t, y)
    h = _initial_step(rhs, x0, k1, t_end, spec)
    nsteps = 0
    while qi < len(query_times):
        if nsteps >= spec.max_steps:
            raise StiffnessError(f"exceeded max_steps={spec.max_steps}", t=t)
        if h < 1e-14 * max(t_end, 1.0):
            raise StiffnessError(f"step size underflow (h={h:.3e})", t=t)
        h = min(h, t_end - t)
        ks = [k1]
        for s in range(1, 6):
            y_s = _combine(y, h, _A[s], ks)
            ks.append(rhs(t + _C[s] * h, y_s))
        y_new = _combine(y, h, _A[6], ks)  # 5th-order solution (b row = a7)
        k7 = rhs(t + h, y_new)
        ks.append(k7)
        err = h * sum(c * _vals(k) for c, k in zip(_E, ks) if c != 0.0)
        norm = _error_norm(err, _vals(y), _vals(y_new), spec)
        nsteps += 1
        if norm <= 1.0:
            # accepted: serve query times inside (t, t+h] via dense output
            dense = None
            while qi < len(query_times) and query_times[qi] <= t + h + 1e-14 * max(t_end, 1.0):
                tq = float(query_times[qi])
                if tq >= t + h:
                    states.append(y_new)
                else:
                    if dense is None:
                        dense = _dense_coeffs(y, y_new, h, ks)
                    states.append(_dense_eval(dense, (tq - t) / h))
                qi += 1
            t += h
            y = y_new
            k1 = k7  # FSAL
        factor = 5.0 if norm == 0.0 else 0.9 * norm ** -0.2
        h *= min(5.0, max(0.2, factor))
    return states


def _dense_coeffs(y, y_new, h, ks):
    ydiff = y_new - y
    r1 = y
    r2 = ydiff
    r3 = h * ks[0] - ydiff
    r4 = ydiff - h * ks[6] - r3
    r5 = (h * _D[0]) * ks[0]
    for c, k in zip(_D[1:], ks[1:]):
        if c != 0.0:
            r5 = r5 + (h * c) * k
    return r1, r2, r3, r4, r5


def _dense_eval(coeffs, theta):
    r1, r2, r3, r4, r5 = coeffs
    t1 = 1.0 - theta
    return r1 + theta * (r2 + t1 * (r3 + theta * (r4 + t1 * r5)))


# ---------------------------------------------------------------------------
# Convergence-order utility (used by tests and the acceptance suite)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarProblem:
    rhs: Callable[[float, np.ndarray], np.ndarray]
    x0: np.ndarray
    exact: Callable[[float], np.ndarray]


def exp_decay_problem() -> ScalarProblem:
    """x' = -x, x(0) = 1, exact solution e^{-t}."""
    return ScalarProblem(
        rhs=lambda t, x: -x,
        x0=np.array([[1.0]]),
        exact=lambda t: np.array([[np.exp(-t)]]),
    )


def order_check(method: str, problem: ScalarProblem | None = None, h: float = 0.1) -> float:
    """error(h) / error(h/2) at t=1 for a fixed-step method; for a smooth
    problem the ratio approaches 2^order."""
    problem = problem or exp_decay_problem()
    errs = []
    for step in (h, h / 2):
        spec = SolverSpec(method=method, step=step)
        traj = solve(problem.rhs, problem.x0, np.array([1.0]), spec)
        errs.append(float(np.max(np.abs(traj.values()[0] - problem.exact(1.0)))))
    return errs[0] / errs[1]
