"""Online generation of the linear regression y = Omega theta.

Two parameterizations are provided:

* power balance: one scalar equation obtained by filtering the mechanical
  power qd' tau and the energy regressor;
* force balance: n equations obtained by filtering the joint torques and the
  basis force terms.

Both use stable first-order filters advanced with the global explicit-Euler
step.  ``step`` returns the regression pair sampled at the incoming
measurement (state before the update), then advances the filter states; with
the zero-transient initialization chosen here the identity y = Omega theta
holds exactly at t = 0 and the residual stays at the integration-error level
afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .plant import Plant


@dataclass
class RegressionPair:
    """One sample of the regression equation: y (n_out,) and Omega (n_out, l)."""

    y: np.ndarray
    omega: np.ndarray


def _check_filter_constants(lambda0: float, lambda1: float):
    if not lambda0 > 0.0:
        raise ValueError(f"lambda0 must be positive, got {lambda0}")
    if not lambda1 > 0.0:
        raise ValueError(f"lambda1 must be positive, got {lambda1}")


class PowerBalanceRegression:
    """Scalar regression from the filtered power-balance identity.

    State: y (filtered power) and z (l,) with Omega' = z + lambda0 * omega(q, qd),
    where omega is the plant's energy regressor.  z(0) = -lambda0 * omega(q0, qd0)
    and y(0) = 0 make the residual vanish at t = 0.
    """

    def __init__(self, plant: Plant, q0, qd0, lambda0: float = 1.0, lambda1: float = 1.0):
        _check_filter_constants(lambda0, lambda1)
        self.plant = plant
        self.lambda0 = float(lambda0)
        self.lambda1 = float(lambda1)
        self._y = 0.0
        self._z = -self.lambda0 * plant.energy_regressor(q0, qd0)

    @property
    def y(self) -> float:
        return self._y

    @property
    def z(self) -> np.ndarray:
        return self._z.copy()

    def output(self, q, qd) -> RegressionPair:
        """Regression pair for the current state and the given measurement."""
        row = self._z + self.lambda0 * self.plant.energy_regressor(q, qd)
        return RegressionPair(y=np.array([self._y]), omega=row[None, :])

    def step(self, q, qd, tau, dt: float) -> RegressionPair:
        """Sample the pair at this measurement, then advance one Euler step."""
        if not dt > 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        qd = np.asarray(qd, dtype=float)
        omega = self.plant.energy_regressor(q, qd)
        row = self._z + self.lambda0 * omega
        pair = RegressionPair(y=np.array([self._y]), omega=row[None, :])
        power = float(qd @ np.asarray(tau, dtype=float))
        self._y += dt * (-self.lambda1 * self._y + self.lambda0 * power)
        self._z += dt * (-self.lambda1 * row)
        return pair


class ForceBalanceRegression:
    """Vector regression from the filtered force-balance equations.

    The inertia-side block is built from the filtered basis forces

        phi1_k = lambda0 M_k(q) qd + (lambda0 / 2 lambda1) grad_q(qd' M_k(q) qd)
        phi3_k = M_k(q) qd

    with Omega_d1 = z + lambda0 phi3, while the potential block Omega_d2 is the
    filtered gravity regressor Psi(q).  Initialization zeroes the t = 0
    residual for any initial state.
    """

    def __init__(self, plant: Plant, q0, qd0, lambda0: float = 1.0, lambda1: float = 1.0):
        _check_filter_constants(lambda0, lambda1)
        self.plant = plant
        self.lambda0 = float(lambda0)
        self.lambda1 = float(lambda1)
        n, nu = plant.basis.n, plant.basis.n_potential
        self._y = np.zeros(n)
        self._z = -self.lambda0 * self._phi3(q0, qd0)
        self._omega_d2 = np.zeros((n, nu))

    @property
    def y(self) -> np.ndarray:
        return self._y.copy()

    @property
    def z(self) -> np.ndarray:
        return self._z.copy()

    def _phi3(self, q, qd) -> np.ndarray:
        stack = self.plant.basis.inertia_basis(np.asarray(q, dtype=float))
        return (stack @ np.asarray(qd, dtype=float)).T

    def _phi1(self, q, qd, phi3) -> np.ndarray:
        grad = self.plant.basis.kinetic_grad_basis(np.asarray(q, dtype=float),
                                                   np.asarray(qd, dtype=float))
        return self.lambda0 * phi3 + (self.lambda0 / (2.0 * self.lambda1)) * grad

    def output(self, q, qd) -> RegressionPair:
        phi3 = self._phi3(q, qd)
        omega = np.hstack([self._z + self.lambda0 * phi3, self._omega_d2])
        return RegressionPair(y=self._y.copy(), omega=omega)

    def step(self, q, qd, tau, dt: float) -> RegressionPair:
        """Sample the pair at this measurement, then advance one Euler step."""
        if not dt > 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        phi3 = self._phi3(q, qd)
        omega_d1 = self._z + self.lambda0 * phi3
        pair = RegressionPair(y=self._y.copy(),
                              omega=np.hstack([omega_d1, self._omega_d2]))
        phi1 = self._phi1(q, qd, phi3)
        phi2 = self.plant.basis.potential_grad_basis(np.asarray(q, dtype=float))
        self._y = self._y + dt * (-self.lambda1 * self._y
                                  + self.lambda0 * np.asarray(tau, dtype=float))
        self._z = self._z + dt * (-self.lambda1 * (self._z + phi1))
        self._omega_d2 = self._omega_d2 + dt * (-self.lambda1 * self._omega_d2
                                                + self.lambda0 * phi2)
        return pair


def make_regression(kind: str, plant: Plant, q0, qd0,
                    lambda0: float = 1.0, lambda1: float = 1.0):
    """Factory keyed by the configuration value."""
    if kind == "power_balance":
        return PowerBalanceRegression(plant, q0, qd0, lambda0, lambda1)
    if kind == "force_balance":
        return ForceBalanceRegression(plant, q0, qd0, lambda0, lambda1)
    raise ValueError(f"unknown parameterization {kind!r}")
