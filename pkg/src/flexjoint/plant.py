"""Coupled link/motor plant with hysteretic joints, fixed-step RK4 and
sampled-data closed loop."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol

import numpy as np

from . import kernels
from .dynamics import ArmGeometry, TwoLinkArm
from .nonlinear import (
    FrictionParams,
    HysteresisParams,
    HysteresisState,
    friction_torque,
    hysteresis_rate,
    hysteresis_torque,
    joint_vector,
)

RAD2DEG = 180.0 / np.pi
TRACE_COLUMNS = [
    "t", "q1", "q2", "qd1", "qd2", "th1", "th2", "thd1", "thd2",
    "d1", "d2", "tau1", "tau2", "u1", "u2", "r1", "r2", "dest1", "dest2",
]


@dataclass(frozen=True)
class PlantParams:
    geometry: ArmGeometry = ArmGeometry()
    J: tuple[float, float] = (1.0, 1.0)
    friction: tuple[FrictionParams, FrictionParams] = (FrictionParams(), FrictionParams())
    hysteresis: tuple[HysteresisParams, HysteresisParams] = (HysteresisParams(), HysteresisParams())
    D: tuple[float, float] = (1.0, 1.0)  # N·m·s/deg
    encoder_bits: int = 14

    def __post_init__(self):
        if min(self.J) <= 0:
            raise ValueError("motor inertias must be positive")
        if min(self.D) < 0:
            raise ValueError("joint damping must be non-negative")
        if self.encoder_bits < 1:
            raise ValueError("encoder_bits must be >= 1")

    @property
    def model(self) -> TwoLinkArm:
        return TwoLinkArm(self.geometry)

    def packed(self) -> np.ndarray:
        """Flat parameter vector in kernel layout."""
        geo = self.geometry
        head = [geo.m, geo.l, geo.I_link, geo.g, geo.h11_mass_ratio]
        blocks = [joint_vector(self.friction[j], self.hysteresis[j], self.J[j], self.D[j]) for j in range(2)]
        return np.concatenate([head, *blocks])


@dataclass(frozen=True)
class PlantState:
    """Link/motor coordinates in rad and rad/s; hysteresis states in deg."""

    q: np.ndarray
    qd: np.ndarray
    theta: np.ndarray
    thetad: np.ndarray
    x: np.ndarray = field(default_factory=lambda: np.zeros(2))
    x_int: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @classmethod
    def at_rest(cls, q, theta=None) -> PlantState:
        q = np.asarray(q, dtype=float)
        theta = q.copy() if theta is None else np.asarray(theta, dtype=float)
        return cls(q, np.zeros(2), theta, np.zeros(2))

    @classmethod
    def from_vector(cls, v) -> PlantState:
        v = np.asarray(v, dtype=float)
        return cls(v[0:2].copy(), v[2:4].copy(), v[4:6].copy(), v[6:8].copy(), v[8:10].copy(), v[10:12].copy())

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.qd, self.theta, self.thetad, self.x, self.x_int])

    @property
    def delta(self) -> np.ndarray:
        return self.theta - self.q

    @property
    def hyst(self) -> tuple[HysteresisState, HysteresisState]:
        d = self.delta * RAD2DEG
        return tuple(HysteresisState(self.x[j], self.x_int[j], d[j]) for j in range(2))


def joint_torque(state: PlantState, p: PlantParams) -> np.ndarray:
    """Hysteretic spring plus viscous joint damping, N·m."""
    d = state.delta * RAD2DEG
    dd = (state.thetad - state.qd) * RAD2DEG
    h = state.hyst
    return np.array([hysteresis_torque(d[j], h[j], p.hysteresis[j]) + p.D[j] * dd[j] for j in range(2)])


def plant_derivatives(state: PlantState, u, p: PlantParams) -> np.ndarray:
    """d/dt of ``state.as_vector()`` evaluated through the model interface.

    Independent of the compiled kernel (which is checked against it).
    """
    u = np.asarray(u, dtype=float)
    model = p.model
    tau = joint_torque(state, p)
    qdd = model.forward_dynamics(state.q, state.qd, tau)
    f = np.array([friction_torque(state.thetad[j], p.friction[j]) for j in range(2)])
    thdd = (u - f - tau) / np.asarray(p.J)
    dd = (state.thetad - state.qd) * RAD2DEG
    h = state.hyst
    xd = np.array([hysteresis_rate(h[j], dd[j], p.hysteresis[j])[0] for j in range(2)])
    if not np.all(np.isfinite(qdd)):
        raise FloatingPointError("link acceleration not finite")
    return np.concatenate([state.qd, qdd, state.thetad, thdd, xd, xd])


def step(state: PlantState, u, dt: float, p: PlantParams) -> PlantState:
    """One classical RK4 step of all 12 states with ``u`` held."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = state.as_vector()
    kernels.integrate(s, np.asarray(u, dtype=float), p.packed(), dt, 1, 1)
    return PlantState.from_vector(s)


def quantize_encoder(theta, bits: int):
    """Floor to the encoder grid of 2*pi / 2**bits."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    dq = 2.0 * np.pi / 2**bits
    return np.floor(np.asarray(theta, dtype=float) / dq) * dq


def mechanical_energy(state: PlantState, p: PlantParams) -> float:
    """Kinetic + gravity + linear elastic energy; meaningful when the joint
    map is a linear spring (w = 1, k3 = 0)."""
    model = p.model
    ek = model.kinetic_energy(state.q, state.qd) + 0.5 * float(np.sum(np.asarray(p.J) * state.thetad**2))
    k_rad = np.array([h.k1 for h in p.hysteresis]) * RAD2DEG
    return ek + model.potential_energy(state.q) + 0.5 * float(np.sum(k_rad * state.delta**2))


class Command(NamedTuple):
    u: np.ndarray
    r: np.ndarray
    delta_est: np.ndarray  # rad


class Controller(Protocol):
    def update(self, k: int, t: float, theta_meas: np.ndarray, thetad_meas: np.ndarray) -> Command: ...


@dataclass
class SimTrace:
    """Samples at the controller rate; angles in rad, torques in N·m."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    theta: np.ndarray
    thetad: np.ndarray
    tau: np.ndarray
    u: np.ndarray
    r: np.ndarray
    delta_est: np.ndarray
    x: np.ndarray
    x_int: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.theta - self.q

    def table(self) -> np.ndarray:
        return np.column_stack([
            self.t, self.q, self.qd, self.theta, self.thetad, self.delta,
            self.tau, self.u, self.r, self.delta_est,
        ])

    def to_csv(self, path, every: int = 1) -> None:
        data = self.table()[::every]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            np.savetxt(fh, data, fmt="%.15g", delimiter=",")

    @staticmethod
    def read_csv(path) -> dict[str, np.ndarray]:
        with open(path, encoding="utf-8") as fh:
            header = next(csv.reader(fh))
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        return {name: data[:, i] for i, name in enumerate(header)}


def _torques(states: np.ndarray, p: PlantParams) -> np.ndarray:
    d = (states[:, 4:6] - states[:, 0:2]) * RAD2DEG
    dd = (states[:, 6:8] - states[:, 2:4]) * RAD2DEG
    out = np.empty((len(states), 2))
    for j, h in enumerate(p.hysteresis):
        out[:, j] = (h.w * (h.k1 * d[:, j] + h.k3 * d[:, j] ** 3)
                     + (1.0 - h.w) * (h.k1 * states[:, 10 + j] + h.k3 * states[:, 10 + j] ** 3)
                     + p.D[j] * dd[:, j])
    return out


def simulate(p: PlantParams, initial: PlantState, duration: float, controller: Controller | None = None,
             dt: float = 1e-4, control_period: float = 1e-3, observer=None) -> SimTrace:
    """Closed-loop run with the controller sampled and held every
    ``control_period``; it sees quantized motor angles and exact motor rates.

    ``controller=None`` applies u = 0 and integrates in one kernel call; the
    optional ``observer`` (a :class:`flexjoint.observer.BatchObserver`) then
    fills the residual and torsion-estimate columns afterwards.
    """
    if dt <= 0 or control_period <= 0 or duration < 0:
        raise ValueError("dt, control_period must be positive and duration non-negative")
    n_sub = int(round(control_period / dt))
    if n_sub < 1 or abs(n_sub * dt - control_period) > 1e-9 * control_period:
        raise ValueError("control_period must be an integer multiple of dt")
    n_ticks = int(round(duration / control_period))
    P = p.packed()
    s = initial.as_vector().copy()
    t = np.arange(n_ticks + 1) * control_period

    if controller is None:
        s0 = s.copy()
        states = np.vstack([s0, kernels.integrate(s, np.zeros(2), P, dt, n_sub, n_ticks)]) if n_ticks else s0[None]
        u = np.zeros((n_ticks + 1, 2))
        if observer is not None:
            r, dest = observer.run(u, states[:, 6:8])
        else:
            r = np.zeros((n_ticks + 1, 2))
            dest = np.zeros((n_ticks + 1, 2))
    else:
        states = np.empty((n_ticks + 1, kernels.NSTATE))
        u = np.empty((n_ticks + 1, 2))
        r = np.empty((n_ticks + 1, 2))
        dest = np.empty((n_ticks + 1, 2))
        for k in range(n_ticks + 1):
            states[k] = s
            cmd = controller.update(k, t[k], quantize_encoder(s[4:6], p.encoder_bits), s[6:8].copy())
            u[k], r[k], dest[k] = cmd.u, cmd.r, cmd.delta_est
            if k < n_ticks:
                kernels.integrate(s, np.ascontiguousarray(cmd.u, dtype=float), P, dt, n_sub, 1)

    return SimTrace(
        t=t, q=states[:, 0:2], qd=states[:, 2:4], theta=states[:, 4:6], thetad=states[:, 6:8],
        tau=_torques(states, p), u=u, r=r, delta_est=dest, x=states[:, 8:10], x_int=states[:, 10:12],
    )
