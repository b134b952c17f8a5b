import numpy as np
import pytest

from ndcn.errors import StiffnessError
from ndcn.odeint import SolverSpec, Trajectory, exp_decay_problem, order_check, solve


def growth(t, x):
    return x


ONE = np.array([[1.0]])


class TestFixedStep:
    def test_euler_two_steps(self):
        traj = solve(growth, ONE, [1.0], SolverSpec("euler", step=0.5))
        assert traj.values()[0][0, 0] == pytest.approx(2.25, abs=1e-15)

    def test_rk4_single_step_hand_tableau(self):
        # k1=1, k2=1.5, k3=1.75, k4=2.75 -> 1 + (1+3+3.5+2.75)/6 = 65/24
        traj = solve(growth, ONE, [1.0], SolverSpec("rk4", step=1.0))
        assert traj.values()[0][0, 0] == pytest.approx(65.0 / 24.0, abs=1e-15)

    def test_lands_exactly_on_query_times(self):
        times = np.array([0.1, 0.25, 0.9])
        traj = solve(growth, ONE, times, SolverSpec("euler", step=0.2))
        assert np.array_equal(traj.times, times)

    def test_linearity_of_flow(self):
        # same step sequence: the flow of a linear rhs is linear in x0
        rng = np.random.default_rng(0)
        A = rng.normal(size=(4, 4))
        rhs = lambda t, x: A @ x
        u, v = rng.normal(size=(4, 1)), rng.normal(size=(4, 1))
        times = np.array([0.3, 0.7, 1.0])
        spec = SolverSpec("rk4", step=0.05)
        direct = solve(rhs, 2.0 * u + 3.0 * v, times, spec)
        fu = solve(rhs, u, times, spec)
        fv = solve(rhs, v, times, spec)
        for d, a, b in zip(direct.values(), fu.values(), fv.values()):
            assert np.max(np.abs(d - (2.0 * a + 3.0 * b))) <= 1e-9

    def test_query_time_zero_returns_x0(self):
        traj = solve(growth, ONE, [0.0, 0.5], SolverSpec("euler", step=0.1))
        assert traj.values()[0][0, 0] == 1.0

    def test_max_steps_exceeded(self):
        with pytest.raises(StiffnessError):
            solve(growth, ONE, [1.0], SolverSpec("euler", step=1e-4, max_steps=10))


class TestDopri5:
    def test_exp_decay_accuracy(self):
        prob = exp_decay_problem()
        traj = solve(prob.rhs, prob.x0, [1.0], SolverSpec("dopri5", rtol=1e-8, atol=1e-10))
        assert abs(traj.values()[0][0, 0] - np.exp(-1.0)) <= 1e-7

    def test_dense_output_hits_interior_points(self):
        prob = exp_decay_problem()
        times = np.linspace(0.05, 3.0, 40)
        traj = solve(prob.rhs, prob.x0, times, SolverSpec("dopri5", rtol=1e-8, atol=1e-10))
        for t, v in zip(traj.times, traj.values()):
            assert abs(v[0, 0] - np.exp(-t)) <= 1e-6

    def test_tolerance_proportionality(self):
        # halving rtol never increases the closed-form error by more than 2x
        prob = exp_decay_problem()
        errs = []
        for rtol in (1e-5, 5e-6, 2.5e-6, 1.25e-6):
            traj = solve(prob.rhs, prob.x0, [1.0], SolverSpec("dopri5", rtol=rtol, atol=1e-12))
            errs.append(abs(traj.values()[0][0, 0] - np.exp(-1.0)))
        for a, b in zip(errs, errs[1:]):
            assert b <= 2.0 * a + 1e-15

    def test_matrix_state(self):
        rng = np.random.default_rng(3)
        A = -np.eye(5) * 0.7
        x0 = rng.normal(size=(5, 2))
        traj = solve(lambda t, x: A @ x, x0, [0.5, 1.2], SolverSpec("dopri5", rtol=1e-9, atol=1e-11))
        for t, v in zip(traj.times, traj.values()):
            assert np.max(np.abs(v - np.exp(-0.7 * t) * x0)) <= 1e-8

    def test_step_budget(self):
        with pytest.raises(StiffnessError):
            solve(lambda t, x: -x, ONE, [1.0], SolverSpec("dopri5", rtol=1e-13, atol=1e-14, max_steps=3))


class TestOrderCheck:
    def test_euler_first_order(self):
        assert 1.8 <= order_check("euler") <= 2.2

    def test_rk4_fourth_order(self):
        assert 13.6 <= order_check("rk4") <= 18.4


class TestValidation:
    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solve(growth, ONE, [1.0], SolverSpec("heun", step=0.1))

    def test_nonincreasing_times(self):
        with pytest.raises(ValueError):
            solve(growth, ONE, [0.5, 0.5], SolverSpec("euler", step=0.1))

    def test_negative_time(self):
        with pytest.raises(ValueError):
            solve(growth, ONE, [-1.0, 0.5], SolverSpec("euler", step=0.1))

    def test_trajectory_checks_lengths(self):
        with pytest.raises(ValueError):
            Trajectory(np.array([0.0, 1.0]), [ONE])

    def test_determinism(self):
        prob = exp_decay_problem()
        spec = SolverSpec("dopri5", rtol=1e-7, atol=1e-9)
        a = solve(prob.rhs, prob.x0, np.linspace(0.1, 2.0, 7), spec)
        b = solve(prob.rhs, prob.x0, np.linspace(0.1, 2.0, 7), spec)
        for x, y in zip(a.values(), b.values()):
            assert np.array_equal(x, y)
