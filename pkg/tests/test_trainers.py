import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from falab.errors import ContractViolation, DivergenceError
from falab.network import Activation, Dataset, TwoLayerNet, error, init_net
from falab.rng import derive_stream
from falab.trainers import (Schedule, bp_step, fa_reg_step, fa_step, train)


def rand_problem(n=6, d=4, p=16, act="identity", seed=0):
    net = init_net(p, d, act, derive_stream(seed, "W0"),
                   derive_stream(seed, "beta0"), derive_stream(seed, "b"))
    X = derive_stream(seed, "X").gaussian_matrix(n, d, std=1 / np.sqrt(d))
    y = derive_stream(seed, "y").gaussian(n)
    return net, Dataset(X, y)


class TestSchedule:
    def test_kinds(self):
        assert Schedule.zero()(5) == 0.0
        assert Schedule.constant(0.3)(7) == 0.3
        sched = Schedule.cutoff(2.0, 10)
        assert sched(10) == 2.0 and sched(11) == 0.0
        dec = Schedule.exp_decay(1.0, 0.5)
        assert dec(2) == pytest.approx(0.25)

    def test_cumulative(self):
        assert Schedule.cutoff(2.0, 9).cumulative() == pytest.approx(20.0)
        assert Schedule.exp_decay(3.0, 0.5).cumulative() == pytest.approx(6.0)
        assert Schedule.constant(0.1).cumulative() == np.inf
        assert Schedule.zero().cumulative() == 0.0

    def test_validation(self):
        with pytest.raises(ContractViolation):
            Schedule("linear")
        with pytest.raises(ContractViolation):
            Schedule.constant(-1.0)
        with pytest.raises(ContractViolation):
            Schedule.exp_decay(1.0, 0.0)


class TestHandExample:
    """d=1, p=1, n=1, x=1, y=0, W=1, beta=1, b=2, eta=0.1, identity."""

    def make(self):
        net = TwoLayerNet(np.array([[1.0]]), np.array([1.0]), np.array([2.0]),
                          Activation("identity"))
        return net, Dataset(np.array([[1.0]]), np.array([0.0]))

    def test_fa_step_values(self):
        net, data = self.make()
        assert error(net, data)[0] == pytest.approx(1.0)
        fa_step(net, data, 0.1)
        assert net.W[0, 0] == pytest.approx(0.8)    # 1 - 0.1*2*1
        assert net.beta[0] == pytest.approx(0.9)    # 1 - 0.1*1*1
        assert error(net, data)[0] == pytest.approx(0.72)

    def test_bp_step_uses_beta_backward(self):
        net, data = self.make()
        bp_step(net, data, 0.1)
        assert net.W[0, 0] == pytest.approx(0.9)    # backward weight beta=1
        assert net.beta[0] == pytest.approx(0.9)

    def test_reg_step_contracts_beta(self):
        net, data = self.make()
        fa_reg_step(net, data, 0.1, 2.0)
        # beta: (1 - 0.1*2)*1 - 0.1*1 = 0.7; W unchanged vs plain FA
        assert net.beta[0] == pytest.approx(0.7)
        assert net.W[0, 0] == pytest.approx(0.8)


class TestStepProperties:
    def test_updates_are_simultaneous(self):
        # the W-update must use the pre-step beta, not the updated one
        net, data = rand_problem()
        pre_beta = net.beta.copy()
        pre_e = error(net, data)
        bp_step(net, data, 0.01)
        expected_dW = 0.01 / np.sqrt(net.p) * np.outer(pre_beta, data.X.T @ pre_e)
        net2, _ = rand_problem()
        assert np.allclose(net2.W - expected_dW, net.W, atol=1e-15)

    def test_fa_reg_zero_lambda_is_fa_bitwise(self):
        a, data = rand_problem(act="tanh", seed=3)
        b = a.copy()
        fa_step(a, data, 0.02)
        fa_reg_step(b, data, 0.02, 0.0)
        assert np.array_equal(a.W, b.W) and np.array_equal(a.beta, b.beta)

    def test_bp_decreases_loss_small_eta(self):
        net, data = rand_problem(act="tanh", seed=4)
        before = float(error(net, data) @ error(net, data))
        bp_step(net, data, 1e-3)
        after = float(error(net, data) @ error(net, data))
        assert after < before

    def test_identity_fast_path_matches_generic(self):
        # run the identity activation through the generic (nonlinear) branch
        # by relabeling: psi=identity has psi'=1, so tanh code with identity
        # tables must agree; instead compare against a manual dense update
        net, data = rand_problem(seed=5)
        e = error(net, data)
        W_pre, beta_pre = net.W.copy(), net.beta.copy()
        fa_step(net, data, 0.03)
        p = net.p
        manual_W = W_pre - 0.03 / np.sqrt(p) * np.outer(net.b, data.X.T @ e)
        manual_beta = beta_pre - 0.03 / np.sqrt(p) * (W_pre @ (data.X.T @ e))
        assert np.allclose(net.W, manual_W, atol=1e-15)
        assert np.allclose(net.beta, manual_beta, atol=1e-15)

    def test_eta_lambda_bound(self):
        net, data = rand_problem()
        with pytest.raises(ContractViolation):
            fa_reg_step(net, data, 1.0, 1.0)
        with pytest.raises(ContractViolation):
            fa_reg_step(net, data, -0.1, 0.0)

    @given(lam=st.floats(0.0, 5.0), seed=st.integers(0, 20))
    @settings(max_examples=20, deadline=None)
    def test_beta_contraction_factor(self, lam, seed):
        net, data = rand_problem(seed=seed)
        e = error(net, data)
        beta_pre = net.beta.copy()
        eta = 0.05
        fa_reg_step(net, data, eta, lam)
        # reconstruct the beta-gradient with the pre-step W
        net2, _ = rand_problem(seed=seed)
        grad = net2.W @ (data.X.T @ e) / np.sqrt(net2.p)
        assert np.allclose(net.beta, (1 - eta * lam) * beta_pre - eta * grad,
                           atol=1e-12)


class TestTrain:
    def test_records_and_bookkeeping(self):
        net, data = rand_problem(seed=6)
        traj = train(net, data, 0.05, Schedule.constant(0.5), 20, "fa_reg",
                     keep_errors=True)
        assert len(traj.records) == 20
        assert traj.records[0].t == 0
        assert traj.records[0].max_w_drift == 0.0
        # s(t) is the plain sum of recorded errors
        assert np.allclose(traj.s, np.sum(traj.errors, axis=0), atol=1e-12)
        # shat recurrence unrolled by hand
        shat = np.zeros(data.n)
        for t, e in enumerate(traj.errors):
            shat = (1 - 0.05 * 0.5) * shat + e
        assert np.allclose(traj.s_hat, shat, atol=1e-10)

    def test_lambda_ignored_for_unregularized_algorithms(self):
        net, data = rand_problem(seed=7)
        traj = train(net, data, 0.01, Schedule.constant(2.0), 5, "fa")
        assert all(r.lambda_t == 0.0 for r in traj.records)

    def test_steps_validation(self):
        net, data = rand_problem()
        with pytest.raises(ContractViolation):
            train(net, data, 0.01, None, 0, "fa")
        with pytest.raises(ContractViolation):
            train(net, data, 0.01, None, 5, "sgd")

    def test_divergence_carries_partial_trajectory(self):
        net, data = rand_problem(seed=8)
        with pytest.raises(DivergenceError) as info:
            train(net, data, 50.0, None, 3000, "fa")
        exc = info.value
        assert exc.last_finite_step >= 0
        assert len(exc.trajectory.records) == exc.last_finite_step + 1

    def test_err_norm_strictly_decreasing_linear(self):
        net, data = rand_problem(n=10, d=30, p=300, seed=9)
        traj = train(net, data, 0.02, None, 200, "fa")
        err = traj.column("err_norm")
        assert np.all(np.diff(err) < 0)
