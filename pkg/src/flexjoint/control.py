"""Reference transformation, feed-forward terms and the two motor-side
tracking laws.

Control I drives the motors along a transformed reference that already
contains the joint torsion needed to carry the rigid-body torques. Control
II keeps the link reference and adds the torsion predicted by the virtual
sensor to the proportional path.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import ManipulatorModel
from . import kernels
from .nonlinear import (
    FrictionParams,
    HysteresisParams,
    HysteresisState,
    branch_slopes,
    chi_derivative,
    friction_torque,
    joint_vector,
)
from .observer import ObserverGains, ObserverState, observer_step, virtual_sensor_step
from .plant import Command, PlantParams
from .trajectory import PolynomialTrajectory

DEG2RAD = np.pi / 180.0

CONTROL_I_VARIANTS = ("FF", "FF+PD", "FULL")
CONTROL_II_VARIANTS = ("FF", "FF+PD", "FF+PD+VS")


@dataclass(frozen=True)
class GainSet:
    Kp: tuple[float, ...] = (1.3, 1.3)
    Kd: tuple[float, ...] = (0.43, 0.43)

    def __post_init__(self):
        if min(self.Kp) <= 0 or min(self.Kd) <= 0:
            raise ValueError("PD gains must be positive")


@dataclass(frozen=True)
class ReferenceSample:
    """Link reference (rad...) and, once transformed, the motor reference."""

    t: float
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    q3: np.ndarray
    q4: np.ndarray
    tau: np.ndarray | None = None
    tau_dot: np.ndarray | None = None
    tau_ddot: np.ndarray | None = None
    theta: np.ndarray | None = None
    theta_dot: np.ndarray | None = None
    theta_ddot: np.ndarray | None = None
    u_r: np.ndarray | None = None


def reference_sample(traj: PolynomialTrajectory, t: float) -> ReferenceSample:
    d = traj.derivatives([t])[:, 0]
    return ReferenceSample(t, *d)


def stencil_torques(model: ManipulatorModel, traj: PolynomialTrajectory, t, h: float):
    """tau_r and its first two time derivatives by 5-point central stencils."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    taus = []
    for off in (-2, -1, 0, 1, 2):
        d = traj.derivatives(t + off * h)
        taus.append(model.inverse_dynamics_batch(d[0], d[1], d[2]))
    fm2, fm1, f0, fp1, fp2 = taus
    tau_dot = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
    tau_ddot = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h)
    return f0, tau_dot, tau_ddot


def _direction(tau_dot: float, tau_ddot: float) -> float:
    # sign of the torsion rate; dchi/ddelta > 0 so it follows tau
    if tau_dot != 0.0:
        return np.sign(tau_dot)
    return 1.0 if tau_ddot >= 0.0 else -1.0


def _second_derivative(tau_dot, tau_ddot, slope, curv):
    # d2/dt2 of chi^-1(tau(t)); curv = 0 keeps only the tau_ddot term
    return tau_ddot / slope - tau_dot**2 * curv / slope**3


class ReferenceTransformer:
    """Marches the inverse hysteresis along the reference.

    The transformer owns its own hysteresis memory, separate from the plant's
    and from the virtual sensor's, so samples must be fed in time order.
    """

    def __init__(self, model: ManipulatorModel, traj: PolynomialTrajectory,
                 hysteresis: tuple[HysteresisParams, ...], h: float = 1e-4, curvature: bool = True):
        self.curvature = curvature
        self.model = model
        self.traj = traj
        self.hysteresis = tuple(hysteresis)
        self.h = h
        self.memory = tuple(HysteresisState() for _ in self.hysteresis)

    def transform(self, sample: ReferenceSample) -> ReferenceSample:
        tau, tau_dot, tau_ddot = (a[0] for a in stencil_torques(self.model, self.traj, [sample.t], self.h))
        n = len(tau)
        theta, theta_dot, theta_ddot = np.empty(n), np.empty(n), np.empty(n)
        memory = []
        for j, hp in enumerate(self.hysteresis):
            prev = self.memory[j]
            x, xi, d = kernels.inverse_step(prev.x, prev.x_int, prev.delta, tau[j], joint_vector(FrictionParams(), hp))
            st = HysteresisState(x, xi, d)
            memory.append(st)
            direction = _direction(tau_dot[j], tau_ddot[j])
            slope = chi_derivative(d, st, direction, hp)
            curv = float(branch_slopes(d, x, xi, direction, hp)[1]) if self.curvature else 0.0
            theta[j] = sample.q[j] + d * DEG2RAD
            theta_dot[j] = sample.qd[j] + DEG2RAD * tau_dot[j] / slope
            theta_ddot[j] = sample.qdd[j] + DEG2RAD * _second_derivative(tau_dot[j], tau_ddot[j], slope, curv)
        self.memory = tuple(memory)
        return replace(sample, tau=tau, tau_dot=tau_dot, tau_ddot=tau_ddot,
                       theta=theta, theta_dot=theta_dot, theta_ddot=theta_ddot)


def transform_reference(sample: ReferenceSample, transformer: ReferenceTransformer) -> ReferenceSample:
    return transformer.transform(sample)


def feedforward_full(sample: ReferenceSample, J, friction) -> np.ndarray:
    f = np.array([friction_torque(sample.qd[j], friction[j]) for j in range(len(sample.qd))])
    return np.asarray(J) * sample.theta_ddot + sample.tau + f


def feedforward_reduced(sample: ReferenceSample, model: ManipulatorModel, J, friction) -> np.ndarray:
    """Rigid-body feed-forward with the motor inertia lumped on the link
    acceleration; joint elasticity is ignored."""
    f = np.array([friction_torque(sample.qd[j], friction[j]) for j in range(len(sample.qd))])
    H = model.inertia_matrix(sample.q) + np.diag(J)
    return H @ sample.qdd + model.coriolis_vector(sample.q, sample.qd) + model.gravity_vector(sample.q) + f


def control_i(theta_meas, thetad_meas, sample: ReferenceSample, gains: GainSet, variant: str = "FULL",
              u_r=None) -> np.ndarray:
    """PD on motor coordinates plus full feed-forward. Variant "FF+PD" uses
    the untransformed link reference in the PD path."""
    if variant not in CONTROL_I_VARIANTS:
        raise ValueError(f"unknown Control I variant {variant!r}")
    u_r = sample.u_r if u_r is None else u_r
    if variant == "FF":
        return np.array(u_r, dtype=float)
    if variant == "FULL":
        ref, ref_dot = sample.theta, sample.theta_dot
    else:
        ref, ref_dot = sample.q, sample.qd
    Kp, Kd = np.asarray(gains.Kp), np.asarray(gains.Kd)
    return Kp * (ref - theta_meas) + Kd * (ref_dot - thetad_meas) + u_r


def control_ii(theta_meas, thetad_meas, sample: ReferenceSample, delta_est, gains: GainSet,
               u_tilde_r, variant: str = "FF+PD+VS") -> np.ndarray:
    """PD on q_r - theta, the predicted torsion injected through Kp, plus the
    reduced feed-forward."""
    if variant not in CONTROL_II_VARIANTS:
        raise ValueError(f"unknown Control II variant {variant!r}")
    u = np.array(u_tilde_r, dtype=float)
    if variant == "FF":
        return u
    Kp, Kd = np.asarray(gains.Kp), np.asarray(gains.Kd)
    u = u + Kp * (sample.q - theta_meas) + Kd * (sample.qd - thetad_meas)
    if variant == "FF+PD+VS":
        u = u + Kp * np.asarray(delta_est)
    return u


class ReferenceTable:
    """The whole transformed reference on the controller grid.

    Equivalent to feeding every grid sample through
    :class:`ReferenceTransformer`, but vectorised.
    """

    def __init__(self, model: ManipulatorModel, traj: PolynomialTrajectory, p: PlantParams,
                 t: np.ndarray, h: float = 1e-4, friction=None, curvature: bool = True):
        friction = p.friction if friction is None else friction
        self.t = np.asarray(t, dtype=float)
        d = traj.derivatives(self.t)
        self.q, self.qd, self.qdd, self.q3, self.q4 = d
        self.tau, self.tau_dot, self.tau_ddot = stencil_torques(model, traj, self.t, h)
        n = len(self.t)
        self.delta = np.empty((n, 2))
        slope = np.empty((n, 2))
        curv = np.zeros((n, 2))
        for j, hp in enumerate(p.hysteresis):
            dj, xs, xis = kernels.inverse_path(np.ascontiguousarray(self.tau[:, j]), 0.0, 0.0, 0.0,
                                               joint_vector(FrictionParams(), hp))
            self.delta[:, j] = dj
            sgn = np.where(self.tau_dot[:, j] != 0.0, np.sign(self.tau_dot[:, j]),
                           np.where(self.tau_ddot[:, j] >= 0.0, 1.0, -1.0))
            slope[:, j], cj = branch_slopes(dj, xs, xis, sgn, hp)
            if curvature:
                curv[:, j] = cj
        if not np.all(slope > 0):
            raise ValueError("reference leaves the invertible hysteresis regime")
        self.theta = self.q + self.delta * DEG2RAD
        self.theta_dot = self.qd + DEG2RAD * self.tau_dot / slope
        self.theta_ddot = self.qdd + DEG2RAD * _second_derivative(self.tau_dot, self.tau_ddot, slope, curv)
        J = np.asarray(p.J)
        fr = np.column_stack([friction_torque(self.qd[:, j], friction[j]) for j in range(2)])
        self.u_r = J * self.theta_ddot + self.tau + fr
        # (H + J) qdd + C + G = tau_r + J qdd
        self.u_tilde_r = J * self.qdd + self.tau + fr

    def sample(self, k: int) -> ReferenceSample:
        return ReferenceSample(
            self.t[k], self.q[k], self.qd[k], self.qdd[k], self.q3[k], self.q4[k],
            tau=self.tau[k], tau_dot=self.tau_dot[k], tau_ddot=self.tau_ddot[k],
            theta=self.theta[k], theta_dot=self.theta_dot[k], theta_ddot=self.theta_ddot[k],
            u_r=self.u_r[k],
        )


class TrackingController:
    """Sampled tracking controller for :func:`flexjoint.plant.simulate`.

    ``law`` is "I" or "II". The observer and virtual sensor always run so
    that the trace carries r and the torsion estimate; only Control II
    FF+PD+VS feeds the estimate back.

    The feed-forward held over a sample interval is evaluated
    ``feedforward_lead`` seconds after the sample (default: mid-interval, so
    the held torque matches the interval mean of the continuous one). The PD
    path always uses the reference at the sample instant.
    """

    def __init__(self, law: str, variant: str, p: PlantParams, traj: PolynomialTrajectory,
                 duration: float, control_period: float = 1e-3, gains: GainSet = GainSet(),
                 observer_gains: ObserverGains = ObserverGains(), observer_friction=None,
                 stencil_h: float | None = None, curvature: bool = True,
                 feedforward_lead: float | None = None):
        if law not in ("I", "II"):
            raise ValueError(f"unknown control law {law!r}")
        variants = CONTROL_I_VARIANTS if law == "I" else CONTROL_II_VARIANTS
        if variant not in variants:
            raise ValueError(f"variant {variant!r} not available for Control {law}")
        self.law, self.variant = law, variant
        self.p = p
        self.gains = gains
        self.observer_gains = observer_gains
        self.observer_friction = p.friction if observer_friction is None else observer_friction
        self.dt = control_period
        n = int(round(duration / control_period))
        h = control_period / 10.0 if stencil_h is None else stencil_h
        t = np.arange(n + 1) * control_period
        lead = 0.5 * control_period if feedforward_lead is None else feedforward_lead
        if not 0.0 <= lead <= control_period:
            raise ValueError("feedforward_lead must lie within one control period")
        self.table = ReferenceTable(p.model, traj, p, t, h, curvature=curvature)
        ff = self.table if lead == 0.0 else ReferenceTable(p.model, traj, p, t + lead, h, curvature=curvature)
        self.u_r, self.u_tilde_r = ff.u_r, ff.u_tilde_r
        self.obs = ObserverState()
        self.last_u = np.zeros(2)

    def update(self, k, t, theta_meas, thetad_meas) -> Command:
        self.obs, r = observer_step(self.obs, self.last_u, thetad_meas, self.dt, self.observer_gains,
                                    self.observer_friction, self.p.J)
        self.obs, dest = virtual_sensor_step(self.obs, r, self.dt, self.p.hysteresis)
        k = min(k, len(self.table.t) - 1)
        sample = self.table.sample(k)
        if self.law == "I":
            u = control_i(theta_meas, thetad_meas, sample, self.gains, self.variant, u_r=self.u_r[k])
        else:
            u = control_ii(theta_meas, thetad_meas, sample, dest, self.gains, self.u_tilde_r[k], self.variant)
        self.last_u = u
        return Command(u, r, dest)
