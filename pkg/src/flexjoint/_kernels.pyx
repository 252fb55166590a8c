# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the two-link elastic-joint plant.

Mirrors ``_kernels_py`` function for function; see that module for the
parameter and state layouts.
"""
import numpy as np

from libc.math cimport sin, cos, tanh, exp, pow, fabs, ceil, isfinite, M_PI

cdef enum:
    NSTATE = 12
    NGEO = 5
    NJOINT = 14
    NPARAM = 33

# joint block offsets
cdef enum:
    J_J = 0
    J_FC = 1
    J_FS = 2
    J_B = 3
    J_V = 4
    J_MU = 5
    J_GAMMA = 6
    J_D = 7
    J_K1 = 8
    J_K3 = 9
    J_W = 10
    J_PSI = 11
    J_XI = 12
    J_ETA = 13

cdef double RAD2DEG = 180.0 / M_PI

COMPILED = True


cdef inline double _friction(double v, const double* jp) noexcept nogil:
    cdef double av = fabs(v)
    if av == 0.0:
        return 0.0
    return tanh(0.5 * jp[J_GAMMA] * v) * (
        jp[J_FC] + jp[J_FS] * exp(-pow(av / jp[J_V], jp[J_MU]))
    ) + jp[J_B] * v


cdef inline double _xrate(double x, double dd, const double* jp) noexcept nogil:
    cdef double ax = fabs(x)
    cdef double p = pow(ax, jp[J_ETA] - 1.0)
    return dd - jp[J_PSI] * fabs(dd) * p * x - jp[J_XI] * dd * p * ax


cdef inline double _dxdd(double x, double sgn, const double* jp) noexcept nogil:
    cdef double ax = fabs(x)
    cdef double p = pow(ax, jp[J_ETA] - 1.0)
    return 1.0 - jp[J_PSI] * sgn * p * x - jp[J_XI] * p * ax


cdef inline double _alpha(double d, const double* jp) noexcept nogil:
    return jp[J_K1] * d + jp[J_K3] * d * d * d


cdef inline double _chi(double d, double xint, const double* jp) noexcept nogil:
    cdef double w = jp[J_W]
    return w * _alpha(d, jp) + (1.0 - w) * _alpha(xint, jp)


cdef inline double _chi_slope(double d, double x, double xint, double sgn,
                              const double* jp) noexcept nogil:
    cdef double w = jp[J_W]
    return (w * (jp[J_K1] + 3.0 * jp[J_K3] * d * d)
            + (1.0 - w) * (jp[J_K1] + 3.0 * jp[J_K3] * xint * xint) * _dxdd(x, sgn, jp))


cdef void _rhs(const double* s, const double* u, const double* P, double* ds) noexcept nogil:
    cdef double m = P[0], l = P[1], inertia = P[2], g = P[3], ratio = P[4]
    cdef double ml2 = m * l * l
    cdef double c2 = cos(s[1]), s2 = sin(s[1])
    cdef double c12 = cos(s[0] + s[1])
    cdef double h11 = ml2 * (0.25 + ratio * (1.25 + c2)) + 2.0 * inertia
    cdef double h12 = ml2 * (0.25 + 0.5 * c2) + inertia
    cdef double h22 = 0.25 * ml2 + inertia
    cdef double cor1 = -0.5 * ml2 * s2 * (2.0 * s[3] * s[2] + s[3] * s[3])
    cdef double cor2 = 0.5 * ml2 * s2 * s[2] * s[2]
    cdef double gr1 = m * l * g * (1.5 * cos(s[0]) + 0.5 * c12)
    cdef double gr2 = 0.5 * m * l * g * c12
    cdef double tau[2]
    cdef double dl, dld, b1, b2, det
    cdef const double* jp
    cdef int j
    for j in range(2):
        jp = P + NGEO + NJOINT * j
        dl = (s[4 + j] - s[j]) * RAD2DEG
        dld = (s[6 + j] - s[2 + j]) * RAD2DEG
        tau[j] = _chi(dl, s[10 + j], jp) + jp[J_D] * dld
        ds[8 + j] = _xrate(s[8 + j], dld, jp)
        ds[10 + j] = ds[8 + j]
        ds[4 + j] = s[6 + j]
        ds[6 + j] = (u[j] - _friction(s[6 + j], jp) - tau[j]) / jp[J_J]
    b1 = tau[0] - cor1 - gr1
    b2 = tau[1] - cor2 - gr2
    det = h11 * h22 - h12 * h12
    ds[0] = s[2]
    ds[1] = s[3]
    ds[2] = (h22 * b1 - h12 * b2) / det
    ds[3] = (h11 * b2 - h12 * b1) / det


cdef void _rk4(double* s, const double* u, const double* P, double dt) noexcept nogil:
    cdef double k1[NSTATE]
    cdef double k2[NSTATE]
    cdef double k3[NSTATE]
    cdef double k4[NSTATE]
    cdef double tmp[NSTATE]
    cdef int i
    _rhs(s, u, P, k1)
    for i in range(NSTATE):
        tmp[i] = s[i] + 0.5 * dt * k1[i]
    _rhs(tmp, u, P, k2)
    for i in range(NSTATE):
        tmp[i] = s[i] + 0.5 * dt * k2[i]
    _rhs(tmp, u, P, k3)
    for i in range(NSTATE):
        tmp[i] = s[i] + dt * k3[i]
    _rhs(tmp, u, P, k4)
    for i in range(NSTATE):
        s[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


def plant_rhs(double[::1] state, double[::1] u, double[::1] params):
    out = np.empty(NSTATE)
    cdef double[::1] o = out
    _rhs(&state[0], &u[0], &params[0], &o[0])
    return out


def integrate(double[::1] state, double[::1] u, double[::1] params,
              double dt, int n_sub, int n_ticks):
    """Advance ``state`` in place by n_ticks * n_sub RK4 steps, u held.

    Returns the (n_ticks, 12) array of states at the end of every tick.
    """
    out = np.empty((n_ticks, NSTATE))
    cdef double[:, ::1] o = out
    cdef double* s = &state[0]
    cdef int k, i, j
    cdef bint ok = True
    with nogil:
        for k in range(n_ticks):
            for j in range(n_sub):
                _rk4(s, &u[0], &params[0], dt)
            for i in range(NSTATE):
                o[k, i] = s[i]
                if not isfinite(s[i]):
                    ok = False
            if not ok:
                break
    if not ok:
        raise FloatingPointError("non-finite plant state; reduce dt")
    return out


cdef void _advance(double* x, double* xint, double inc, int nsub,
                   const double* jp) noexcept nogil:
    # RK4 in the torsion domain; rate independence makes time irrelevant
    cdef double sgn = 1.0 if inc > 0.0 else -1.0
    cdef double h = inc / nsub
    cdef double y = x[0], a, b, c, d
    cdef int i
    if inc == 0.0:
        return
    for i in range(nsub):
        a = _dxdd(y, sgn, jp)
        b = _dxdd(y + 0.5 * h * a, sgn, jp)
        c = _dxdd(y + 0.5 * h * b, sgn, jp)
        d = _dxdd(y + h * c, sgn, jp)
        y = y + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
    xint[0] = xint[0] + (y - x[0])
    x[0] = y


cdef int _inverse(double* x, double* xint, double* delta, double tau,
                  const double* jp, double hmax) noexcept nogil:
    cdef double w = jp[J_W], k1 = jp[J_K1]
    cdef double d0 = delta[0], x0 = x[0], xi0 = xint[0]
    cdef double f0 = _chi(d0, xi0, jp) - tau
    cdef double tol = 1e-12 * (1.0 if fabs(tau) < 1.0 else fabs(tau))
    cdef double width, lo, hi, sgn, d, dn, f, slope, xt, xit
    cdef int nsub, it
    if fabs(f0) <= tol:
        return 0
    # chi' >= w*k1 everywhere, so this interval always brackets the root
    width = fabs(f0) / (w * k1)
    if f0 < 0.0:
        lo = d0
        hi = d0 + width
        sgn = 1.0
    else:
        lo = d0 - width
        hi = d0
        sgn = -1.0
    nsub = <int>ceil(width / hmax)
    if nsub < 1:
        nsub = 1
    d = d0 - f0 / _chi_slope(d0, x0, xi0, sgn, jp)
    xt = x0
    xit = xi0
    for it in range(200):
        xt = x0
        xit = xi0
        _advance(&xt, &xit, d - d0, nsub, jp)
        f = _chi(d, xit, jp) - tau
        if fabs(f) <= tol:
            break
        if f < 0.0:
            lo = d
        else:
            hi = d
        if hi - lo <= 1e-15 * (1.0 + fabs(d)):
            break
        slope = _chi_slope(d, xt, xit, sgn, jp)
        dn = d - f / slope
        if not (lo < dn < hi):
            dn = 0.5 * (lo + hi)
        d = dn
    x[0] = xt
    xint[0] = xit
    delta[0] = d
    return it


def inverse_step(double x, double xint, double delta, double tau,
                 double[::1] joint, double hmax=5e-5):
    """One implicit inverse-hysteresis step; returns (x, xint, delta)."""
    _inverse(&x, &xint, &delta, tau, &joint[0], hmax)
    return x, xint, delta


def inverse_path(double[::1] tau, double x, double xint, double delta,
                 double[::1] joint, double hmax=5e-5):
    """March the inverse model along a torque sequence.

    Returns (delta, x, xint) arrays, one entry per torque sample.
    """
    cdef Py_ssize_t n = tau.shape[0], k
    out = np.empty((3, n))
    cdef double[:, ::1] o = out
    with nogil:
        for k in range(n):
            _inverse(&x, &xint, &delta, tau[k], &joint[0], hmax)
            o[0, k] = delta
            o[1, k] = x
            o[2, k] = xint
    return out[0], out[1], out[2]


def advance_path(double[::1] delta, double x, double xint, double delta0,
                 double[::1] joint, double hmax=5e-5):
    """Drive the forward model along torsion samples; returns (x, xint) arrays."""
    cdef Py_ssize_t n = delta.shape[0], k
    cdef double prev = delta0, inc
    cdef int nsub
    out = np.empty((2, n))
    cdef double[:, ::1] o = out
    with nogil:
        for k in range(n):
            inc = delta[k] - prev
            nsub = <int>ceil(fabs(inc) / hmax)
            if nsub < 1:
                nsub = 1
            _advance(&x, &xint, inc, nsub, &joint[0])
            prev = delta[k]
            o[0, k] = x
            o[1, k] = xint
    return out[0], out[1]


def march_rate(double[::1] rate, double dt, double x, double xint, double[::1] joint):
    """Time-domain RK4 of the internal state with the torsion rate held per step.

    Returns (x, xint) arrays after every step.
    """
    cdef Py_ssize_t n = rate.shape[0], k
    cdef const double* jp = &joint[0]
    cdef double r, a, b, c, d, y
    out = np.empty((2, n))
    cdef double[:, ::1] o = out
    with nogil:
        for k in range(n):
            r = rate[k]
            y = x
            a = _xrate(y, r, jp)
            b = _xrate(y + 0.5 * dt * a, r, jp)
            c = _xrate(y + 0.5 * dt * b, r, jp)
            d = _xrate(y + dt * c, r, jp)
            y = y + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
            xint = xint + (y - x)
            x = y
            o[0, k] = x
            o[1, k] = xint
    return out[0], out[1]
