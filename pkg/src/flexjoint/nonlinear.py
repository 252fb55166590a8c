"""Motor friction and torsion-torque hysteresis of a single joint.

Hysteresis quantities live in degrees (torsion) and N·m (torque) so the
stiffness constants can be used exactly as tabulated; convert radians at the
call site.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

# max torsion sub-increment (deg) when integrating the internal state in delta
HMAX = 5e-5


@dataclass(frozen=True)
class FrictionParams:
    """Stribeck curve with sigmoid zero-crossing.

    Zero Fc, Fs and B are accepted so friction can be switched off in
    conservation checks.
    """

    Fc: float = 10.0
    Fs: float = 5.0
    B: float = 1.0
    V: float = 2.0
    mu: float = -2.0
    gamma: float = 500.0

    def __post_init__(self):
        if self.Fc < 0 or self.Fs < 0 or self.B < 0:
            raise ValueError("Fc, Fs, B must be non-negative")
        if self.V <= 0 or self.gamma <= 0:
            raise ValueError("V and gamma must be positive")
        if self.mu == 0:
            raise ValueError("mu must be non-zero")


@dataclass(frozen=True)
class HysteresisParams:
    """Bouc-Wen-like torsion-torque map; k1 in N·m/deg, k3 in N·m/deg^3.

    ``w = 1`` (purely elastic) is allowed for linear-reduction checks.
    """

    k1: float = 300.0
    k3: float = 50000.0
    w: float = 0.4
    psi: float = 300.0
    xi: float = 500.0
    eta: float = 1.5

    def __post_init__(self):
        if self.k1 <= 0 or self.k3 < 0:
            raise ValueError("need k1 > 0 and k3 >= 0")
        if not 0 < self.w <= 1:
            raise ValueError("w must be in (0, 1]")
        if self.eta < 1:
            raise ValueError("eta must be >= 1")

    @property
    def x_bound(self) -> float:
        """Saturation level of the internal state under monotone loading."""
        if self.psi + self.xi <= 0:
            return np.inf
        return (1.0 / (self.psi + self.xi)) ** (1.0 / self.eta)


@dataclass(frozen=True)
class HysteresisState:
    """Internal Bouc-Wen state ``x`` and its running integral ``x_int``
    (deg). ``delta`` is the torsion at which the state was last updated; the
    inverse model needs it to know the increment of the next step."""

    x: float = 0.0
    x_int: float = 0.0
    delta: float = 0.0


def joint_vector(friction: FrictionParams, hyst: HysteresisParams, J: float = 1.0, D: float = 0.0) -> np.ndarray:
    """Pack one joint's constants in kernel order."""
    return np.array([
        J, friction.Fc, friction.Fs, friction.B, friction.V, friction.mu, friction.gamma, D,
        hyst.k1, hyst.k3, hyst.w, hyst.psi, hyst.xi, hyst.eta,
    ], dtype=float)


def sigmoid(v, gamma):
    # 2/(1+exp(-g v)) - 1 == tanh(g v / 2), without overflow for large |g v|
    return np.tanh(0.5 * gamma * np.asarray(v, dtype=float))


def friction_torque(thetad, p: FrictionParams):
    v = np.asarray(thetad, dtype=float)
    av = np.abs(v)
    with np.errstate(divide="ignore", over="ignore"):
        stribeck = np.where(av > 0, np.exp(-np.power(np.where(av > 0, av, 1.0) / p.V, p.mu)), 0.0)
    return sigmoid(v, p.gamma) * (p.Fc + p.Fs * stribeck) + p.B * v


def alpha(delta, p: HysteresisParams):
    d = np.asarray(delta, dtype=float)
    return p.k1 * d + p.k3 * d**3


def _alpha_inverse_scalar(tau: float, p: HysteresisParams) -> float:
    if not np.isfinite(tau):
        raise ValueError("alpha_inverse needs a finite torque")
    if tau == 0.0:
        return 0.0
    # alpha(tau/k1) >= tau for tau > 0 since k3 >= 0: [0, tau/k1] brackets the root
    lo, hi = sorted((0.0, tau / p.k1))
    d = hi if tau > 0 else lo
    for _ in range(100):
        f = p.k1 * d + p.k3 * d**3 - tau
        if abs(f) <= 1e-12:
            break
        if f > 0:
            hi = d
        else:
            lo = d
        dn = d - f / (p.k1 + 3.0 * p.k3 * d * d)
        if not lo <= dn <= hi:
            dn = 0.5 * (lo + hi)
        if dn == d:
            break
        d = dn
    return d


def alpha_inverse(tau_bar, p: HysteresisParams):
    """Unique real root of k1 d + k3 d^3 = tau_bar (safeguarded Newton)."""
    if np.ndim(tau_bar) == 0:
        return _alpha_inverse_scalar(float(tau_bar), p)
    t = np.asarray(tau_bar, dtype=float)
    return np.array([_alpha_inverse_scalar(v, p) for v in t.ravel()]).reshape(t.shape)


def hysteresis_rate(state: HysteresisState, delta_dot, p: HysteresisParams) -> tuple[float, float]:
    """Time derivative of (x, x_int) for a torsion rate in deg/s."""
    x = state.x
    ax = abs(x)
    pw = ax ** (p.eta - 1.0)
    xd = delta_dot - p.psi * abs(delta_dot) * pw * x - p.xi * delta_dot * pw * ax
    return xd, xd


def hysteresis_torque(delta, state: HysteresisState, p: HysteresisParams):
    """Weighted sum of the static spring and the history-dependent term."""
    return p.w * alpha(delta, p) + (1.0 - p.w) * alpha(state.x_int, p)


def branch_slopes(delta, x, x_int, direction, p: HysteresisParams):
    """First and second derivative of tau w.r.t. delta along the branch
    travelled in ``direction``; array-valued."""
    delta, x, xi = (np.asarray(a, dtype=float) for a in (delta, x, x_int))
    sgn = np.where(np.asarray(direction) >= 0, 1.0, -1.0)
    ax = np.abs(x)
    pw = ax ** (p.eta - 1.0)
    dx = 1.0 - p.psi * sgn * pw * x - p.xi * pw * ax
    ddx = -p.eta * pw * (p.psi * sgn + p.xi * np.sign(x)) * dx
    kb = p.k1 + 3.0 * p.k3 * xi**2
    slope = p.w * (p.k1 + 3.0 * p.k3 * delta**2) + (1.0 - p.w) * kb * dx
    curv = 6.0 * p.k3 * p.w * delta + (1.0 - p.w) * (6.0 * p.k3 * xi * dx * dx + kb * ddx)
    return slope, curv


def chi_derivative(delta, state: HysteresisState, direction, p: HysteresisParams) -> float:
    """Slope dtau/ddelta along the branch travelled in ``direction`` (sign of
    the torsion rate). Raises when the slope is not positive."""
    slope = float(branch_slopes(delta, state.x, state.x_int, direction, p)[0])
    if not slope > 0:
        raise ValueError(f"hysteresis slope {slope} <= 0: map not invertible here")
    return slope


def hysteresis_advance(state: HysteresisState, delta_new: float, p: HysteresisParams,
                       hmax: float = HMAX) -> HysteresisState:
    """Move the forward model to torsion ``delta_new`` (deg)."""
    x, xi = kernels.advance_path(np.array([float(delta_new)]), state.x, state.x_int, state.delta,
                                 joint_vector(FrictionParams(), p), hmax)
    return HysteresisState(float(x[0]), float(xi[0]), float(delta_new))


def hysteresis_loop(delta, p: HysteresisParams, state: HysteresisState | None = None,
                    hmax: float = HMAX) -> tuple[np.ndarray, HysteresisState]:
    """Torque along a sampled torsion path; returns (tau, final state)."""
    state = state or HysteresisState()
    d = np.ascontiguousarray(delta, dtype=float)
    x, xi = kernels.advance_path(d, state.x, state.x_int, state.delta, joint_vector(FrictionParams(), p), hmax)
    tau = p.w * alpha(d, p) + (1.0 - p.w) * alpha(xi, p)
    return tau, HysteresisState(float(x[-1]), float(xi[-1]), float(d[-1]))


def hysteresis_inverse_step(state: HysteresisState, tau_in: float, dt: float, p: HysteresisParams,
                            hmax: float = HMAX) -> tuple[HysteresisState, float]:
    """Torsion estimate (deg) reproducing ``tau_in`` given the model's memory.

    The implicit relation tau = w alpha(d) + (1 - w) beta(d) is solved exactly
    at every sample, with beta's state advanced along the increment from the
    previous estimate. ``dt`` only validates the sampling; the map itself is
    rate independent.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, xi, d = kernels.inverse_step(state.x, state.x_int, state.delta, float(tau_in),
                                    joint_vector(FrictionParams(), p), hmax)
    return HysteresisState(x, xi, d), d


def hysteresis_inverse_path(tau, p: HysteresisParams, state: HysteresisState | None = None,
                            hmax: float = HMAX) -> tuple[np.ndarray, HysteresisState]:
    """Vectorised :func:`hysteresis_inverse_step` over a torque sequence."""
    state = state or HysteresisState()
    d, x, xi = kernels.inverse_path(np.ascontiguousarray(tau, dtype=float), state.x, state.x_int,
                                    state.delta, joint_vector(FrictionParams(), p), hmax)
    return d, HysteresisState(float(x[-1]), float(xi[-1]), float(d[-1]))


def zero_crossings(delta, tau) -> np.ndarray:
    """Torsions at which a sampled loop crosses zero torque (linear interp.)."""
    d, t = np.asarray(delta, dtype=float), np.asarray(tau, dtype=float)
    i = np.nonzero(np.signbit(t[:-1]) != np.signbit(t[1:]))[0]
    f = t[i] / (t[i] - t[i + 1])
    return d[i] + f * (d[i + 1] - d[i])


def lost_motion(p: HysteresisParams, amplitude: float = 1.0, points: int = 4000) -> float:
    """Zero-torque width (deg) of the loop traced by a sinusoidal torsion of
    ``amplitude`` deg, taken on the second cycle."""
    k = np.arange(2 * points + 1)
    d = amplitude * np.sin(2.0 * np.pi * k / points)
    tau, _ = hysteresis_loop(d, p)
    z = zero_crossings(d[points:], tau[points:])
    if z.size < 2:
        raise ValueError("loop does not cross zero torque")
    return float(z.max() - z.min())
