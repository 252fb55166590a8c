"""Generalized-momentum joint torque observer and the virtual torsion sensor.

The observer runs on controller samples only. Between two samples the motor
torque is held and the momentum and friction are taken as linear in time;
with that input model the residual ODE is integrated exactly (``"exact"``),
or with the trapezoidal rule (``"trapezoid"``).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from .nonlinear import FrictionParams, HysteresisParams, HysteresisState, friction_torque, hysteresis_inverse_path

DEG2RAD = np.pi / 180.0


@dataclass(frozen=True)
class ObserverGains:
    L: tuple[float, ...] = (100.0, 100.0)
    method: str = "exact"

    def __post_init__(self):
        if min(self.L) <= 0:
            raise ValueError("observer gains must be positive")
        if self.method not in ("exact", "trapezoid"):
            raise ValueError(f"unknown observer method {self.method!r}")


@dataclass(frozen=True)
class ObserverState:
    """``p_hat`` is None until the first sample initialises it to J*thetad."""

    p_hat: np.ndarray | None = None
    last_p: np.ndarray | None = None
    last_f: np.ndarray | None = None
    vs: tuple[HysteresisState, ...] = field(default_factory=lambda: (HysteresisState(), HysteresisState()))


def _coefficients(L: np.ndarray, dt: float, method: str):
    """p_hat[k] = a*p_hat[k-1] + b0*F0 + b1*F1, with F0 the forcing at the
    left end of the interval and F1 its increment across it."""
    if method == "exact":
        E = np.exp(-L * dt)
        return E, (1.0 - E) / L, 1.0 / L - (1.0 - E) / (L * L * dt)
    den = 1.0 + 0.5 * L * dt
    return (1.0 - 0.5 * L * dt) / den, dt / den, 0.5 * dt / den


def observer_step(obs: ObserverState, u, thetad_meas, dt: float, gains: ObserverGains,
                  friction, J) -> tuple[ObserverState, np.ndarray]:
    """Advance the momentum estimate to the new sample; returns (obs', r).

    ``u`` is the motor torque that was held over the interval just ended.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    L = np.asarray(gains.L, dtype=float)
    thetad = np.asarray(thetad_meas, dtype=float)
    p = np.asarray(J, dtype=float) * thetad
    f = np.array([friction_torque(thetad[j], friction[j]) for j in range(len(thetad))])
    if obs.p_hat is None:
        return replace(obs, p_hat=p.copy(), last_p=p, last_f=f), np.zeros_like(p)
    u = np.asarray(u, dtype=float)
    a, b0, b1 = _coefficients(L, dt, gains.method)
    F0 = u - obs.last_f + L * obs.last_p
    F1 = (u - f + L * p) - F0
    p_hat = a * obs.p_hat + b0 * F0 + b1 * F1
    return replace(obs, p_hat=p_hat, last_p=p, last_f=f), L * (p_hat - p)


def virtual_sensor_step(obs: ObserverState, r, dt: float,
                        hp: tuple[HysteresisParams, ...]) -> tuple[ObserverState, np.ndarray]:
    """Torsion estimate (rad) obtained by inverting the hysteresis at r."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    r = np.asarray(r, dtype=float)
    vs, est = [], np.empty(len(r))
    for j in range(len(r)):
        d, state = hysteresis_inverse_path(r[j:j + 1], hp[j], obs.vs[j])
        vs.append(state)
        est[j] = d[0] * DEG2RAD
    return replace(obs, vs=tuple(vs)), est


@dataclass
class BatchObserver:
    """Observer plus virtual sensor applied to whole recorded sequences."""

    gains: ObserverGains
    friction: tuple[FrictionParams, ...]
    J: tuple[float, ...]
    hysteresis: tuple[HysteresisParams, ...]
    dt: float

    def residual(self, u: np.ndarray, thetad: np.ndarray) -> np.ndarray:
        """r for every sample; u[k] is the command issued at sample k."""
        L = np.asarray(self.gains.L, dtype=float)
        p = thetad * np.asarray(self.J)
        f = np.column_stack([friction_torque(thetad[:, j], self.friction[j]) for j in range(thetad.shape[1])])
        r = np.zeros_like(p)
        if len(p) < 2:
            return r
        a, b0, b1 = _coefficients(L, self.dt, self.gains.method)
        held = u[:-1]
        F0 = held - f[:-1] + L * p[:-1]
        F1 = (held - f[1:] + L * p[1:]) - F0
        for j in range(p.shape[1]):
            forcing = b0[j] * F0[:, j] + b1[j] * F1[:, j]
            p_hat, _ = lfilter([1.0], [1.0, -a[j]], forcing, zi=[a[j] * p[0, j]])
            r[1:, j] = L[j] * (p_hat - p[1:, j])
        return r

    def run(self, u: np.ndarray, thetad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        r = self.residual(u, thetad)
        est = np.column_stack([
            hysteresis_inverse_path(r[:, j], self.hysteresis[j])[0] for j in range(r.shape[1])
        ]) * DEG2RAD
        return r, est
