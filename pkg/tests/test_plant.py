import numpy as np
import pytest

from ftlab.plant import (FrictionModel, NoiseModel, PhysicalParams,
                         ThetaBounds, ThetaVector, default_params)


def reference_deltas():
    """Independent evaluation of the lumped coefficients for the reference
    arm under the uniform-rod completion."""
    m1, m2, l1, l2, g = 2.0, 1.0, 0.3, 0.2, 9.81
    lc1, lc2 = l1 / 2, l2 / 2
    i1, i2 = m1 * l1 ** 2 / 12, m2 * l2 ** 2 / 12
    return np.array([
        (l1 ** 2 + lc2 ** 2) * m2 + lc1 ** 2 * m1 + i1 + i2,
        l1 * lc2 * m2,
        lc2 ** 2 * m2 + i2,
        m2 * lc2 * g,
        (m1 * lc1 + m2 * l1) * g,
    ])


class TestParamsAndTheta:
    def test_uniform_rod_completion(self):
        p = default_params()
        assert p.lc1 == 0.15 and p.lc2 == 0.1
        assert p.I1 == pytest.approx(2.0 * 0.09 / 12.0)
        assert p.I2 == pytest.approx(1.0 * 0.04 / 12.0)

    def test_theta_matches_reference(self):
        theta = ThetaVector.from_params(default_params())
        np.testing.assert_allclose(theta.stacked, reference_deltas(), rtol=1e-14)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            PhysicalParams.uniform_rods(m1=-1.0)

    def test_theta_bounds(self):
        bounds = ThetaBounds(np.array([2.0, 8.0]))
        assert bounds.contains(ThetaVector.from_params(default_params()).theta_u)
        assert not bounds.contains([3.0, 1.0])
        with pytest.raises(ValueError):
            ThetaBounds(np.array([0.0, 1.0]))


class TestInertia:
    def test_straight_configuration(self, plant):
        d = reference_deltas()
        expected = np.array([[d[0] + 2 * d[1], d[2] + d[1]],
                             [d[2] + d[1], d[2]]])
        np.testing.assert_allclose(plant.inertia([0.0, 0.0]), expected, atol=1e-14)

    def test_folded_configuration(self, plant):
        d = reference_deltas()
        expected = np.array([[d[0] - 2 * d[1], d[2] - d[1]],
                             [d[2] - d[1], d[2]]])
        np.testing.assert_allclose(plant.inertia([0.0, np.pi]), expected, atol=1e-12)

    def test_basis_decomposition_exact(self, plant):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = rng.uniform(-np.pi, np.pi, 2)
            stack = plant.basis.inertia_basis(q)
            recomposed = sum(t * mk for t, mk in zip(plant.theta.theta_m, stack))
            np.testing.assert_allclose(plant.inertia(q), recomposed, atol=1e-14)

    def test_uniformly_positive_definite(self, plant):
        mu_m, mu_M = plant.inertia_bounds(n_samples=10000)
        assert mu_m > 1e-4
        assert mu_M < 1.0
        # independent spot check; small slack since both sides are sampled
        rng = np.random.default_rng(99)
        for _ in range(200):
            eigs = np.linalg.eigvalsh(plant.inertia(rng.uniform(-np.pi, np.pi, 2)))
            assert eigs[0] >= mu_m * (1.0 - 1e-3)
            assert eigs[-1] <= mu_M * (1.0 + 1e-3)


class TestCoriolis:
    def test_zero_velocity(self, plant):
        np.testing.assert_array_equal(plant.coriolis([0.3, 1.1], [0.0, 0.0]),
                                      np.zeros((2, 2)))

    def test_zero_elbow_angle(self, plant):
        np.testing.assert_allclose(plant.coriolis([0.7, 0.0], [1.0, 2.0]),
                                   np.zeros((2, 2)), atol=1e-15)

    def test_skew_symmetry_against_finite_difference(self, plant):
        rng = np.random.default_rng(2)
        h = 1e-6
        for _ in range(1000):
            q = rng.uniform(-np.pi, np.pi, 2)
            qd = rng.uniform(-3.0, 3.0, 2)
            v = rng.uniform(-1.0, 1.0, 2)
            m_dot = (plant.inertia(q + h * qd) - plant.inertia(q - h * qd)) / (2 * h)
            resid = abs(v @ (m_dot - 2.0 * plant.coriolis(q, qd)) @ v)
            assert resid <= 1e-5 * (v @ v) * max(1.0, np.linalg.norm(qd))


class TestGravity:
    def test_hanging_pose(self, plant):
        np.testing.assert_array_equal(plant.gravity([0.0, 0.0]), [0.0, 0.0])

    def test_horizontal_first_link(self, plant):
        d = reference_deltas()
        np.testing.assert_allclose(plant.psi([np.pi / 2, 0.0]),
                                   [[1.0, 1.0], [1.0, 0.0]], atol=1e-15)
        np.testing.assert_allclose(plant.gravity([np.pi / 2, 0.0]),
                                   [d[3] + d[4], d[3]], rtol=1e-12)

    def test_factorization_exact(self, plant):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            q = rng.uniform(-2 * np.pi, 2 * np.pi, 2)
            resid = plant.gravity(q) - plant.psi(q) @ plant.theta.theta_u
            assert np.max(np.abs(resid)) <= 1e-14

    def test_psi_uniformly_bounded(self, plant):
        rng = np.random.default_rng(4)
        for _ in range(200):
            q = rng.uniform(-10.0, 10.0, 2)
            assert np.linalg.norm(plant.psi(q)) <= 2.0


class TestEnergy:
    def test_potential_basis_at_rest_pose(self, plant):
        np.testing.assert_allclose(plant.potential_basis([0.0, 0.0]), [-1.0, -1.0])

    def test_kinetic_basis_zero_velocity(self, plant):
        np.testing.assert_array_equal(plant.kinetic_basis([1.0, 2.0], [0.0, 0.0]),
                                      np.zeros(3))

    def test_energy_is_regressor_times_theta(self, plant):
        rng = np.random.default_rng(5)
        for _ in range(100):
            q = rng.uniform(-np.pi, np.pi, 2)
            qd = rng.uniform(-3.0, 3.0, 2)
            direct = 0.5 * qd @ plant.inertia(q) @ qd \
                - plant.theta.theta_u[0] * np.cos(q[0] + q[1]) \
                - plant.theta.theta_u[1] * np.cos(q[0])
            assert plant.total_energy(q, qd) == pytest.approx(direct, abs=1e-12)

    def test_rest_energy(self, plant):
        d = reference_deltas()
        assert plant.total_energy([0.0, 0.0], [0.0, 0.0]) == pytest.approx(-(d[3] + d[4]))


class TestForwardDynamics:
    def test_gravity_hold_is_equilibrium(self, plant):
        q = np.array([0.4, -0.9])
        qdd = plant.forward_dynamics(q, np.zeros(2), plant.gravity(q))
        np.testing.assert_allclose(qdd, np.zeros(2), atol=1e-14)

    def test_hanging_pose_zero_torque(self, plant):
        qdd = plant.forward_dynamics([0.0, 0.0], [0.0, 0.0], [0.0, 0.0])
        np.testing.assert_allclose(qdd, np.zeros(2), atol=1e-14)

    def test_residual_oracle(self, plant):
        rng = np.random.default_rng(6)
        for _ in range(200):
            q = rng.uniform(-np.pi, np.pi, 2)
            qd = rng.uniform(-3.0, 3.0, 2)
            tau = rng.uniform(-10.0, 10.0, 2)
            tau_f = rng.uniform(-0.5, 0.5, 2)
            qdd = plant.forward_dynamics(q, qd, tau, tau_f)
            resid = plant.inertia(q) @ qdd + plant.coriolis(q, qd) @ qd \
                + plant.gravity(q) - tau + tau_f
            assert np.max(np.abs(resid)) <= 1e-10


class TestFrictionAndNoise:
    def test_friction_at_rest(self):
        np.testing.assert_array_equal(FrictionModel().torque([0.0, 0.0]), [0.0, 0.0])

    def test_friction_signs(self):
        np.testing.assert_allclose(FrictionModel().torque([-1.0, 2.0]), [-0.5, 0.4])

    def test_noise_at_zero(self):
        noise = NoiseModel()
        np.testing.assert_allclose(noise.position(0.0), [0.0, 0.005])
        np.testing.assert_allclose(noise.velocity(0.0), [0.0, 0.0])

    def test_noise_bounded(self):
        noise = NoiseModel()
        for t in np.linspace(0.0, 1.0, 500):
            assert np.max(np.abs(noise.position(t))) <= 0.005 + 1e-15
            assert np.max(np.abs(noise.velocity(t))) <= 0.005 + 1e-15

    def test_friction_rejects_negative(self):
        with pytest.raises(ValueError):
            FrictionModel(np.array([-0.1, 0.4]))
