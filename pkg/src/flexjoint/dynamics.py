"""Rigid-link manipulator models.

Controllers and the plant only talk to :class:`ManipulatorModel`; the planar
two-link arm under gravity is the one concrete model shipped.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np


def _vec(v, n: int, name: str = "vector") -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {a.shape}")
    return a


@dataclass(frozen=True)
class ArmGeometry:
    """Mass/length data of the two-link arm.

    Both links have length ``l`` and their centres of mass sit at mid-length.
    ``m`` is the first link's mass. ``h11_mass_ratio`` is the second-link mass
    fraction (of ``m``) used in the h11 element only: 1.0 keeps H consistent
    with the Coriolis and gravity terms (positive definite everywhere), 0.5
    gives the ``m l^2 (0.875 + 0.5 cos q2) + 2I`` form, which is indefinite
    for small ``|q2|`` and only usable for static evaluation.
    """

    m: float = 10.0
    l: float = 0.5
    I_link: float = 0.5
    g: float = 9.8
    h11_mass_ratio: float = 1.0

    def __post_init__(self):
        if self.m <= 0 or self.l <= 0 or self.I_link <= 0:
            raise ValueError("m, l and I_link must be positive")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if self.h11_mass_ratio <= 0:
            raise ValueError("h11_mass_ratio must be positive")


class ManipulatorModel(abc.ABC):
    """Joint-space rigid-body model H(q) qdd + C(q, qd) + G(q) = tau."""

    n_joints: int

    @abc.abstractmethod
    def inertia_matrix(self, q) -> np.ndarray: ...

    @abc.abstractmethod
    def coriolis_vector(self, q, qd) -> np.ndarray: ...

    @abc.abstractmethod
    def gravity_vector(self, q) -> np.ndarray: ...

    @abc.abstractmethod
    def potential_energy(self, q) -> float: ...

    @abc.abstractmethod
    def forward_kinematics(self, q) -> tuple[float, float]: ...

    def rigid_inverse_dynamics(self, q, qd, qdd) -> np.ndarray:
        n = self.n_joints
        q, qd, qdd = _vec(q, n, "q"), _vec(qd, n, "qd"), _vec(qdd, n, "qdd")
        return self.inertia_matrix(q) @ qdd + self.coriolis_vector(q, qd) + self.gravity_vector(q)

    def inverse_dynamics_batch(self, q, qd, qdd) -> np.ndarray:
        """Row-wise :meth:`rigid_inverse_dynamics` for (N, n) arrays."""
        return np.array([self.rigid_inverse_dynamics(a, b, c) for a, b, c in zip(q, qd, qdd)])

    def forward_dynamics(self, q, qd, tau) -> np.ndarray:
        b = _vec(tau, self.n_joints, "tau") - self.coriolis_vector(q, qd) - self.gravity_vector(q)
        return np.linalg.solve(self.inertia_matrix(q), b)

    def kinetic_energy(self, q, qd) -> float:
        qd = _vec(qd, self.n_joints, "qd")
        return 0.5 * float(qd @ self.inertia_matrix(q) @ qd)


class TwoLinkArm(ManipulatorModel):
    """Planar two-link arm with revolute joints; q1 is measured from the
    horizontal, q2 relative to link 1, gravity along -Z."""

    n_joints = 2

    def __init__(self, geometry: ArmGeometry | None = None):
        self.geometry = geometry or ArmGeometry()

    def inertia_matrix(self, q) -> np.ndarray:
        q = _vec(q, 2, "q")
        geo = self.geometry
        ml2 = geo.m * geo.l**2
        c2 = np.cos(q[1])
        h11 = ml2 * (0.25 + geo.h11_mass_ratio * (1.25 + c2)) + 2.0 * geo.I_link
        h12 = ml2 * (0.25 + 0.5 * c2) + geo.I_link
        h22 = 0.25 * ml2 + geo.I_link
        return np.array([[h11, h12], [h12, h22]])

    def coriolis_vector(self, q, qd) -> np.ndarray:
        q, qd = _vec(q, 2, "q"), _vec(qd, 2, "qd")
        a = 0.5 * self.geometry.m * self.geometry.l**2 * np.sin(q[1])
        return np.array([-a * (2.0 * qd[1] * qd[0] + qd[1] ** 2), a * qd[0] ** 2])

    def gravity_vector(self, q) -> np.ndarray:
        q = _vec(q, 2, "q")
        geo = self.geometry
        mlg = geo.m * geo.l * geo.g
        c12 = np.cos(q[0] + q[1])
        return np.array([mlg * (1.5 * np.cos(q[0]) + 0.5 * c12), 0.5 * mlg * c12])

    def inverse_dynamics_batch(self, q, qd, qdd) -> np.ndarray:
        q, qd, qdd = (np.asarray(a, dtype=float) for a in (q, qd, qdd))
        geo = self.geometry
        ml2 = geo.m * geo.l**2
        mlg = geo.m * geo.l * geo.g
        c2, s2 = np.cos(q[:, 1]), np.sin(q[:, 1])
        c12 = np.cos(q[:, 0] + q[:, 1])
        h11 = ml2 * (0.25 + geo.h11_mass_ratio * (1.25 + c2)) + 2.0 * geo.I_link
        h12 = ml2 * (0.25 + 0.5 * c2) + geo.I_link
        h22 = 0.25 * ml2 + geo.I_link
        a = 0.5 * ml2 * s2
        tau1 = (h11 * qdd[:, 0] + h12 * qdd[:, 1] - a * (2.0 * qd[:, 1] * qd[:, 0] + qd[:, 1] ** 2)
                + mlg * (1.5 * np.cos(q[:, 0]) + 0.5 * c12))
        tau2 = h12 * qdd[:, 0] + h22 * qdd[:, 1] + a * qd[:, 0] ** 2 + 0.5 * mlg * c12
        return np.column_stack([tau1, tau2])

    def potential_energy(self, q) -> float:
        q = _vec(q, 2, "q")
        geo = self.geometry
        return geo.m * geo.g * geo.l * (1.5 * np.sin(q[0]) + 0.5 * np.sin(q[0] + q[1]))

    def forward_kinematics(self, q) -> tuple[float, float]:
        q = _vec(q, 2, "q")
        l = self.geometry.l
        x = l * np.cos(q[0]) + l * np.cos(q[0] + q[1])
        z = l * np.sin(q[0]) + l * np.sin(q[0] + q[1])
        return float(x), float(z)
