import numpy as np
import pytest

from ftlab.regression import (ForceBalanceRegression, PowerBalanceRegression,
                              make_regression)

DT = 5e-4


class TestPowerBalance:
    def test_zero_transient_initialization(self, plant):
        reg = PowerBalanceRegression(plant, [3.0, 0.0], [0.0, 0.0], 1.0, 1.0)
        pair = reg.output([3.0, 0.0], [0.0, 0.0])
        assert pair.y[0] == 0.0
        np.testing.assert_allclose(pair.omega, np.zeros((1, 5)), atol=1e-15)

    def test_rejects_nonpositive_constants(self, plant):
        with pytest.raises(ValueError):
            PowerBalanceRegression(plant, [0.0, 0.0], [0.0, 0.0], lambda0=0.0)
        with pytest.raises(ValueError):
            PowerBalanceRegression(plant, [0.0, 0.0], [0.0, 0.0], lambda1=-1.0)
        reg = PowerBalanceRegression(plant, [0.0, 0.0], [0.0, 0.0])
        with pytest.raises(ValueError):
            reg.step([0.0, 0.0], [0.0, 0.0], [0.0, 0.0], 0.0)

    def test_single_euler_step_of_y(self, plant):
        # unit power input: qd' tau = 1
        reg = PowerBalanceRegression(plant, [0.0, 0.0], [1.0, 0.0], 1.0, 1.0)
        reg.step([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], DT)
        assert reg.y == DT
        reg.step([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], DT)
        assert reg.y == DT + DT * (1.0 - DT)

    def test_unforced_filters_stay_zero(self, plant):
        reg = PowerBalanceRegression(plant, [0.0, 0.0], [0.0, 0.0], 1.0, 1.0)
        for _ in range(100):
            pair = reg.step([0.0, 0.0], [0.0, 0.0], [0.0, 0.0], DT)
        assert pair.y[0] == 0.0
        # inertia columns see no motion; potential columns track the filter
        np.testing.assert_allclose(pair.omega[0, :3], np.zeros(3), atol=1e-15)

    def test_residual_along_closed_loop(self, c1_case1_pb):
        trace = c1_case1_pb
        theta = trace.meta["theta_true"]
        resid = np.abs(trace.diagnostics["y"][:, 0]
                       - trace.diagnostics["omega"][:, 0, :] @ theta)
        assert resid.max() <= 5.0 * DT
        # after the transient has been flushed the identity is tight
        k5 = int(round(5.0 / DT))
        tail = resid[k5:] / (1.0 + np.abs(trace.diagnostics["y"][k5:, 0]))
        assert tail.max() <= 5e-5


class TestForceBalance:
    def test_zero_velocity_initialization(self, plant):
        reg = ForceBalanceRegression(plant, [3.0, 0.0], [0.0, 0.0], 1.0, 1.0)
        np.testing.assert_array_equal(reg.z, np.zeros((2, 3)))
        pair = reg.output([3.0, 0.0], [0.0, 0.0])
        np.testing.assert_array_equal(pair.y, np.zeros(2))
        np.testing.assert_allclose(pair.omega, np.zeros((2, 5)), atol=1e-15)

    def test_nonzero_initial_velocity_still_zero_residual(self, plant):
        q0, qd0 = np.array([1.0, -0.5]), np.array([2.0, 1.0])
        reg = ForceBalanceRegression(plant, q0, qd0, 1.5, 1.0)
        pair = reg.output(q0, qd0)
        resid = pair.y - pair.omega @ plant.theta.stacked
        np.testing.assert_allclose(resid, np.zeros(2), atol=1e-14)

    def test_potential_block_is_filtered_gravity_regressor(self, plant):
        q = np.array([np.pi / 2, 0.0])
        reg = ForceBalanceRegression(plant, q, np.zeros(2), 1.0, 1.0)
        # one Euler step loads the potential block with dt * lambda0 * Psi
        reg.step(q, np.zeros(2), np.zeros(2), DT)
        pair = reg.output(q, np.zeros(2))
        np.testing.assert_allclose(pair.omega[:, 3:], DT * np.array([[1.0, 1.0], [1.0, 0.0]]),
                                   atol=1e-15)

    def test_kinetic_gradient_against_finite_difference(self, plant):
        rng = np.random.default_rng(11)
        h = 1e-7
        for _ in range(200):
            q = rng.uniform(-np.pi, np.pi, 2)
            qd = rng.uniform(-3.0, 3.0, 2)
            grad = plant.basis.kinetic_grad_basis(q, qd)
            for k in range(3):
                for i in range(2):
                    eq = np.zeros(2)
                    eq[i] = h
                    mk_p = plant.basis.inertia_basis(q + eq)[k]
                    mk_m = plant.basis.inertia_basis(q - eq)[k]
                    fd = (qd @ mk_p @ qd - qd @ mk_m @ qd) / (2 * h)
                    assert grad[i, k] == pytest.approx(fd, abs=1e-6)

    def test_residual_along_closed_loop(self, c1_case1):
        trace = c1_case1
        theta = trace.meta["theta_true"]
        resid = np.linalg.norm(trace.diagnostics["y"]
                               - trace.diagnostics["omega"] @ theta, axis=1)
        assert resid.max() <= 5.0 * DT
        k5 = int(round(5.0 / DT))
        y_norm = np.linalg.norm(trace.diagnostics["y"][k5:], axis=1)
        assert np.max(resid[k5:] / (1.0 + y_norm)) <= 1e-6

    def test_omega_bounded_on_bounded_signals(self, c1_case1):
        assert np.isfinite(c1_case1.diagnostics["omega"]).all()
        assert np.max(np.abs(c1_case1.diagnostics["omega"])) < 50.0


def test_factory_dispatch(plant):
    assert isinstance(make_regression("power_balance", plant, [0, 0], [0, 0]),
                      PowerBalanceRegression)
    assert isinstance(make_regression("force_balance", plant, [0, 0], [0, 0]),
                      ForceBalanceRegression)
    with pytest.raises(ValueError):
        make_regression("banana", plant, [0, 0], [0, 0])
