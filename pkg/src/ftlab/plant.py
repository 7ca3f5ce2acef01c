"""Euler-Lagrange plant dynamics behind a basis-decomposed interface.

The dynamics are written as known basis terms times unknown constant
coefficients,

    M(q)  = sum_k M_k(q) theta_m[k]          (inertia)
    U(q)  = sum_k U_k(q) theta_u[k]          (potential energy)
    g(q)  = Psi(q) theta_u                   (potential forces)

so that the same machinery serves any fully actuated arm described by such a
decomposition.  The shipped instance is the planar two-link manipulator with
revolute joints; friction and measurement noise are separate bolt-on models
that only the simulation loop applies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalDegeneracyError


@dataclass(frozen=True)
class PhysicalParams:
    """Link masses/lengths/inertias of the two-link arm.

    lc1/lc2 are the centre-of-mass offsets and I1/I2 the link inertias about
    the centre of mass.  All quantities strictly positive.
    """

    m1: float
    m2: float
    l1: float
    l2: float
    g: float
    lc1: float
    lc2: float
    I1: float
    I2: float

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "g", "lc1", "lc2", "I1", "I2"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"physical parameter {name} must be positive")

    @classmethod
    def uniform_rods(cls, m1: float = 2.0, m2: float = 1.0, l1: float = 0.3,
                     l2: float = 0.2, g: float = 9.81) -> "PhysicalParams":
        """Complete the link data under the uniform-rod model:
        lc_i = l_i / 2 and I_i = m_i l_i^2 / 12."""
        return cls(m1=m1, m2=m2, l1=l1, l2=l2, g=g,
                   lc1=l1 / 2.0, lc2=l2 / 2.0,
                   I1=m1 * l1 ** 2 / 12.0, I2=m2 * l2 ** 2 / 12.0)


def default_params() -> PhysicalParams:
    """Reference arm: m1=2 kg, m2=1 kg, l1=0.3 m, l2=0.2 m, g=9.81 m/s^2,
    uniform-rod completion of the unstated centre-of-mass/inertia data."""
    return PhysicalParams.uniform_rods()


@dataclass(frozen=True)
class ThetaVector:
    """Stacked unknown parameters: inertia-side theta_m then potential-side
    theta_u."""

    theta_m: np.ndarray
    theta_u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta_m", np.asarray(self.theta_m, dtype=float))
        object.__setattr__(self, "theta_u", np.asarray(self.theta_u, dtype=float))

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.theta_m, self.theta_u])

    @property
    def size(self) -> int:
        return self.theta_m.size + self.theta_u.size

    @classmethod
    def from_params(cls, p: PhysicalParams) -> "ThetaVector":
        """Coefficients of the two-link arm decomposition."""
        d1 = (p.l1 ** 2 + p.lc2 ** 2) * p.m2 + p.lc1 ** 2 * p.m1 + p.I1 + p.I2
        d2 = p.l1 * p.lc2 * p.m2
        d3 = p.lc2 ** 2 * p.m2 + p.I2
        d4 = p.m2 * p.lc2 * p.g
        d5 = (p.m1 * p.lc1 + p.m2 * p.l1) * p.g
        return cls(theta_m=np.array([d1, d2, d3]), theta_u=np.array([d4, d5]))


@dataclass(frozen=True)
class ThetaBounds:
    """Entrywise box bound on the potential-side parameters."""

    theta_bar: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "theta_bar", np.asarray(self.theta_bar, dtype=float))
        if not np.all(self.theta_bar > 0.0):
            raise ValueError("theta_bar entries must be positive")

    def contains(self, theta_u) -> bool:
        return bool(np.all(np.abs(np.asarray(theta_u, dtype=float)) <= self.theta_bar))


@dataclass(frozen=True)
class BasisFunctions:
    """Callback bundle defining the known structural part of an EL system.

    inertia_basis(q)            -> (n_inertia, n, n) stack of M_k(q)
    coriolis_basis(q, qd)       -> (n_inertia, n, n) stack of C_k(q, qd),
                                   Christoffel-consistent with M_k
    potential_basis(q)          -> (n_potential,) values U_k(q)
    potential_grad_basis(q)     -> (n, n_potential), columns grad U_k = Psi(q)
    kinetic_grad_basis(q, qd)   -> (n, n_inertia), column k = grad_q(qd' M_k(q) qd)
    """

    n: int
    n_inertia: int
    n_potential: int
    inertia_basis: Callable[[np.ndarray], np.ndarray]
    coriolis_basis: Callable[[np.ndarray, np.ndarray], np.ndarray]
    potential_basis: Callable[[np.ndarray], np.ndarray]
    potential_grad_basis: Callable[[np.ndarray], np.ndarray]
    kinetic_grad_basis: Callable[[np.ndarray, np.ndarray], np.ndarray]


def _two_link_inertia_basis(q: np.ndarray) -> np.ndarray:
    c2 = np.cos(q[1])
    return np.array([
        [[1.0, 0.0], [0.0, 0.0]],
        [[2.0 * c2, c2], [c2, 0.0]],
        [[0.0, 1.0], [1.0, 1.0]],
    ])


def _two_link_coriolis_basis(q: np.ndarray, qd: np.ndarray) -> np.ndarray:
    s2 = np.sin(q[1])
    out = np.zeros((3, 2, 2))
    out[1] = s2 * np.array([[-qd[1], -(qd[0] + qd[1])], [qd[0], 0.0]])
    return out


def _two_link_potential_basis(q: np.ndarray) -> np.ndarray:
    return np.array([-np.cos(q[0] + q[1]), -np.cos(q[0])])


def _two_link_potential_grad(q: np.ndarray) -> np.ndarray:
    s12 = np.sin(q[0] + q[1])
    s1 = np.sin(q[0])
    return np.array([[s12, s1], [s12, 0.0]])


def _two_link_kinetic_grad(q: np.ndarray, qd: np.ndarray) -> np.ndarray:
    # Only M_2 depends on q:  qd' M_2 qd = 2 c2 qd1 (qd1 + qd2).
    out = np.zeros((2, 3))
    out[1, 1] = -2.0 * np.sin(q[1]) * qd[0] * (qd[0] + qd[1])
    return out


def two_link_basis() -> BasisFunctions:
    """Basis decomposition of the planar two-link arm."""
    return BasisFunctions(
        n=2, n_inertia=3, n_potential=2,
        inertia_basis=_two_link_inertia_basis,
        coriolis_basis=_two_link_coriolis_basis,
        potential_basis=_two_link_potential_basis,
        potential_grad_basis=_two_link_potential_grad,
        kinetic_grad_basis=_two_link_kinetic_grad,
    )


class Plant:
    """Evaluation of the EL dynamics for a given basis bundle and parameter
    vector.  All methods are pure; instances hold no mutable state."""

    def __init__(self, basis: BasisFunctions, theta: ThetaVector):
        if theta.theta_m.size != basis.n_inertia:
            raise ValueError("theta_m length does not match the inertia basis")
        if theta.theta_u.size != basis.n_potential:
            raise ValueError("theta_u length does not match the potential basis")
        self.basis = basis
        self.theta = theta

    @classmethod
    def two_link(cls, params: PhysicalParams | None = None) -> "Plant":
        params = params or default_params()
        return cls(two_link_basis(), ThetaVector.from_params(params))

    @property
    def n(self) -> int:
        return self.basis.n

    def inertia(self, q) -> np.ndarray:
        """Inertia matrix M(q), symmetric positive definite."""
        stack = self.basis.inertia_basis(np.asarray(q, dtype=float))
        k, n = stack.shape[0], stack.shape[1]
        return (self.theta.theta_m @ stack.reshape(k, n * n)).reshape(n, n)

    def coriolis(self, q, qd) -> np.ndarray:
        """Coriolis/centrifugal matrix C(q, qd) from Christoffel symbols, so
        that dM/dt = C + C' along trajectories."""
        stack = self.basis.coriolis_basis(np.asarray(q, dtype=float),
                                          np.asarray(qd, dtype=float))
        k, n = stack.shape[0], stack.shape[1]
        return (self.theta.theta_m @ stack.reshape(k, n * n)).reshape(n, n)

    def psi(self, q) -> np.ndarray:
        """Potential-force regressor Psi(q) with g(q) = Psi(q) theta_u."""
        return self.basis.potential_grad_basis(np.asarray(q, dtype=float))

    def gravity(self, q) -> np.ndarray:
        return self.psi(q) @ self.theta.theta_u

    def kinetic_basis(self, q, qd) -> np.ndarray:
        """Per-basis kinetic energies (1/2) qd' M_k(q) qd."""
        q = np.asarray(q, dtype=float)
        qd = np.asarray(qd, dtype=float)
        stack = self.basis.inertia_basis(q)
        return 0.5 * ((stack @ qd) @ qd)

    def potential_basis(self, q) -> np.ndarray:
        return self.basis.potential_basis(np.asarray(q, dtype=float))

    def energy_regressor(self, q, qd) -> np.ndarray:
        """Row of basis energies: total energy = energy_regressor . theta."""
        return np.concatenate([self.kinetic_basis(q, qd), self.potential_basis(q)])

    def total_energy(self, q, qd) -> float:
        return float(self.energy_regressor(q, qd) @ self.theta.stacked)

    def inertia_bounds(self, n_samples: int = 10000, seed: int = 0):
        """Sampled uniform bounds (mu_m, mu_M) with mu_m I <= M(q) <= mu_M I,
        over configurations drawn from [-pi, pi]^n.  The inertia of a
        revolute-joint arm is periodic in q, so the sample covers its range."""
        rng = np.random.default_rng(seed)
        mu_m, mu_M = np.inf, 0.0
        for _ in range(n_samples):
            eigs = np.linalg.eigvalsh(self.inertia(rng.uniform(-np.pi, np.pi, self.n)))
            mu_m = min(mu_m, float(eigs[0]))
            mu_M = max(mu_M, float(eigs[-1]))
        return mu_m, mu_M

    def forward_dynamics(self, q, qd, tau, tau_f=None) -> np.ndarray:
        """Joint accelerations from M(q) qdd + C(q,qd) qd + g(q) = tau - tau_f.

        Friction enters as an opposing torque on the plant side only.
        """
        q = np.asarray(q, dtype=float)
        qd = np.asarray(qd, dtype=float)
        rhs = np.asarray(tau, dtype=float) - self.coriolis(q, qd) @ qd - self.gravity(q)
        if tau_f is not None:
            rhs = rhs - np.asarray(tau_f, dtype=float)
        m = self.inertia(q)
        if m.shape == (2, 2):
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            if abs(det) < 1e-300:
                raise NumericalDegeneracyError("inertia matrix is singular; "
                                               "parameters are likely corrupted")
            return np.array([(m[1, 1] * rhs[0] - m[0, 1] * rhs[1]) / det,
                             (m[0, 0] * rhs[1] - m[1, 0] * rhs[0]) / det])
        try:
            return np.linalg.solve(m, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalDegeneracyError("inertia matrix is singular; "
                                           "parameters are likely corrupted") from exc


@dataclass(frozen=True)
class FrictionModel:
    """Coulomb friction, tau_f_i = coulomb_i * sign(qd_i)."""

    coulomb: np.ndarray = field(default_factory=lambda: np.array([0.5, 0.4]))

    def __post_init__(self):
        object.__setattr__(self, "coulomb", np.asarray(self.coulomb, dtype=float))
        if not np.all(self.coulomb >= 0.0):
            raise ValueError("friction coefficients must be nonnegative")

    def torque(self, qd) -> np.ndarray:
        return self.coulomb * np.sign(np.asarray(qd, dtype=float))


@dataclass(frozen=True)
class NoiseModel:
    """Deterministic sinusoidal measurement noise.

    Each channel is amplitude * sin(frequency t) or amplitude * cos(...)
    according to its phase selector; the reference pattern is (sin, cos) on
    positions and (sin, sin) on velocities.
    """

    amplitude: float = 0.005
    frequency: float = 100.0
    position_phases: tuple = ("sin", "cos")
    velocity_phases: tuple = ("sin", "sin")

    def __post_init__(self):
        for phase in self.position_phases + self.velocity_phases:
            if phase not in ("sin", "cos"):
                raise ValueError(f"phase selector must be 'sin' or 'cos', got {phase!r}")

    def _eval(self, phases, t: float) -> np.ndarray:
        w = self.frequency * t
        return self.amplitude * np.array(
            [np.sin(w) if p == "sin" else np.cos(w) for p in phases])

    def position(self, t: float) -> np.ndarray:
        return self._eval(self.position_phases, t)

    def velocity(self, t: float) -> np.ndarray:
        return self._eval(self.velocity_phases, t)
