"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Used when the extension is not built (or ``FLEXJOINT_PURE_PYTHON=1``). Both
modules expose the same functions and must produce the same numbers up to
floating-point reassociation.

Parameter vector layout (length 33)::

    [m, l, I, g, h11_mass_ratio,
     joint 1 block (14), joint 2 block (14)]

joint block: J, Fc, Fs, B, V, mu, gamma, D, k1, k3, w, psi, xi, eta

State layout (length 12)::

    q1 q2 qd1 qd2 th1 th2 thd1 thd2 x1 x2 xint1 xint2

Angles and rates of the mechanical states are in rad; the hysteresis
states x, xint are in degrees like the torsion they track.
"""
from math import ceil, cos, exp, isfinite, pi, sin, tanh

import numpy as np

NSTATE = 12
NGEO = 5
NJOINT = 14
NPARAM = NGEO + 2 * NJOINT
RAD2DEG = 180.0 / pi
COMPILED = False

(J_J, J_FC, J_FS, J_B, J_V, J_MU, J_GAMMA, J_D,
 J_K1, J_K3, J_W, J_PSI, J_XI, J_ETA) = range(NJOINT)


def _friction(v, jp):
    av = abs(v)
    if av == 0.0:
        return 0.0
    return tanh(0.5 * jp[J_GAMMA] * v) * (
        jp[J_FC] + jp[J_FS] * exp(-((av / jp[J_V]) ** jp[J_MU]))
    ) + jp[J_B] * v


def _xrate(x, dd, jp):
    ax = abs(x)
    p = ax ** (jp[J_ETA] - 1.0)
    return dd - jp[J_PSI] * abs(dd) * p * x - jp[J_XI] * dd * p * ax


def _dxdd(x, sgn, jp):
    ax = abs(x)
    p = ax ** (jp[J_ETA] - 1.0)
    return 1.0 - jp[J_PSI] * sgn * p * x - jp[J_XI] * p * ax


def _alpha(d, jp):
    return jp[J_K1] * d + jp[J_K3] * d * d * d


def _chi(d, xint, jp):
    w = jp[J_W]
    return w * _alpha(d, jp) + (1.0 - w) * _alpha(xint, jp)


def _chi_slope(d, x, xint, sgn, jp):
    w = jp[J_W]
    return (w * (jp[J_K1] + 3.0 * jp[J_K3] * d * d)
            + (1.0 - w) * (jp[J_K1] + 3.0 * jp[J_K3] * xint * xint) * _dxdd(x, sgn, jp))


def _rhs(s, u, P):
    m, l, inertia, g, ratio = P[0], P[1], P[2], P[3], P[4]
    ml2 = m * l * l
    c2, s2 = cos(s[1]), sin(s[1])
    c12 = cos(s[0] + s[1])
    h11 = ml2 * (0.25 + ratio * (1.25 + c2)) + 2.0 * inertia
    h12 = ml2 * (0.25 + 0.5 * c2) + inertia
    h22 = 0.25 * ml2 + inertia
    cor1 = -0.5 * ml2 * s2 * (2.0 * s[3] * s[2] + s[3] * s[3])
    cor2 = 0.5 * ml2 * s2 * s[2] * s[2]
    gr1 = m * l * g * (1.5 * cos(s[0]) + 0.5 * c12)
    gr2 = 0.5 * m * l * g * c12
    ds = [0.0] * NSTATE
    tau = [0.0, 0.0]
    for j in range(2):
        jp = P[NGEO + NJOINT * j: NGEO + NJOINT * (j + 1)]
        dl = (s[4 + j] - s[j]) * RAD2DEG
        dld = (s[6 + j] - s[2 + j]) * RAD2DEG
        tau[j] = _chi(dl, s[10 + j], jp) + jp[J_D] * dld
        ds[8 + j] = ds[10 + j] = _xrate(s[8 + j], dld, jp)
        ds[4 + j] = s[6 + j]
        ds[6 + j] = (u[j] - _friction(s[6 + j], jp) - tau[j]) / jp[J_J]
    b1 = tau[0] - cor1 - gr1
    b2 = tau[1] - cor2 - gr2
    det = h11 * h22 - h12 * h12
    ds[0] = s[2]
    ds[1] = s[3]
    ds[2] = (h22 * b1 - h12 * b2) / det
    ds[3] = (h11 * b2 - h12 * b1) / det
    return ds


def _rk4(s, u, P, dt):
    k1 = _rhs(s, u, P)
    k2 = _rhs([a + 0.5 * dt * b for a, b in zip(s, k1)], u, P)
    k3 = _rhs([a + 0.5 * dt * b for a, b in zip(s, k2)], u, P)
    k4 = _rhs([a + dt * b for a, b in zip(s, k3)], u, P)
    return [a + dt / 6.0 * (b + 2.0 * c + 2.0 * d + e)
            for a, b, c, d, e in zip(s, k1, k2, k3, k4)]


def plant_rhs(state, u, params):
    return np.array(_rhs(list(state), list(u), list(params)))


def integrate(state, u, params, dt, n_sub, n_ticks):
    """Advance ``state`` in place by n_ticks * n_sub RK4 steps, u held.

    Returns the (n_ticks, 12) array of states at the end of every tick.
    """
    s = [float(v) for v in state]
    uu = [float(v) for v in u]
    P = [float(v) for v in params]
    out = np.empty((n_ticks, NSTATE))
    for k in range(n_ticks):
        for _ in range(n_sub):
            s = _rk4(s, uu, P, dt)
        out[k] = s
        if not all(isfinite(v) for v in s):
            raise FloatingPointError("non-finite plant state; reduce dt")
    state[:] = s
    return out


def _advance(x, xint, inc, nsub, jp):
    if inc == 0.0:
        return x, xint
    sgn = 1.0 if inc > 0.0 else -1.0
    h = inc / nsub
    y = x
    for _ in range(nsub):
        a = _dxdd(y, sgn, jp)
        b = _dxdd(y + 0.5 * h * a, sgn, jp)
        c = _dxdd(y + 0.5 * h * b, sgn, jp)
        d = _dxdd(y + h * c, sgn, jp)
        y = y + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
    return y, xint + (y - x)


def _inverse(x0, xi0, d0, tau, jp, hmax):
    w, k1 = jp[J_W], jp[J_K1]
    f0 = _chi(d0, xi0, jp) - tau
    tol = 1e-12 * max(1.0, abs(tau))
    if abs(f0) <= tol:
        return x0, xi0, d0
    width = abs(f0) / (w * k1)
    if f0 < 0.0:
        lo, hi, sgn = d0, d0 + width, 1.0
    else:
        lo, hi, sgn = d0 - width, d0, -1.0
    nsub = max(1, int(ceil(width / hmax)))
    d = d0 - f0 / _chi_slope(d0, x0, xi0, sgn, jp)
    xt, xit = x0, xi0
    for _ in range(200):
        xt, xit = _advance(x0, xi0, d - d0, nsub, jp)
        f = _chi(d, xit, jp) - tau
        if abs(f) <= tol:
            break
        if f < 0.0:
            lo = d
        else:
            hi = d
        if hi - lo <= 1e-15 * (1.0 + abs(d)):
            break
        dn = d - f / _chi_slope(d, xt, xit, sgn, jp)
        if not lo < dn < hi:
            dn = 0.5 * (lo + hi)
        d = dn
    return xt, xit, d


def inverse_step(x, xint, delta, tau, joint, hmax=5e-5):
    """One implicit inverse-hysteresis step; returns (x, xint, delta)."""
    return _inverse(float(x), float(xint), float(delta), float(tau), list(joint), hmax)


def inverse_path(tau, x, xint, delta, joint, hmax=5e-5):
    """March the inverse model along a torque sequence.

    Returns (delta, x, xint) arrays, one entry per torque sample.
    """
    jp = list(joint)
    out = np.empty((3, len(tau)))
    for k, t in enumerate(tau):
        x, xint, delta = _inverse(x, xint, delta, float(t), jp, hmax)
        out[:, k] = delta, x, xint
    return out[0], out[1], out[2]


def advance_path(delta, x, xint, delta0, joint, hmax=5e-5):
    """Drive the forward model along torsion samples; returns (x, xint) arrays."""
    jp = list(joint)
    out = np.empty((2, len(delta)))
    prev = delta0
    for k, d in enumerate(delta):
        inc = float(d) - prev
        x, xint = _advance(x, xint, inc, max(1, int(ceil(abs(inc) / hmax))), jp)
        prev = float(d)
        out[:, k] = x, xint
    return out[0], out[1]


def march_rate(rate, dt, x, xint, joint):
    """Time-domain RK4 of the internal state with the torsion rate held per step.

    Returns (x, xint) arrays after every step.
    """
    jp = list(joint)
    out = np.empty((2, len(rate)))
    for k, r in enumerate(rate):
        r = float(r)
        a = _xrate(x, r, jp)
        b = _xrate(x + 0.5 * dt * a, r, jp)
        c = _xrate(x + 0.5 * dt * b, r, jp)
        d = _xrate(x + dt * c, r, jp)
        y = x + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
        xint += y - x
        x = y
        out[:, k] = x, xint
    return out[0], out[1]
