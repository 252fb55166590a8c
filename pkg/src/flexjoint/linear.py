"""Single-joint linearization with predicted-torsion feedback u = Kp*d_est.

Polynomials are ascending-degree coefficient arrays in s.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

from .dynamics import ArmGeometry, TwoLinkArm
from .nonlinear import FrictionParams, HysteresisParams

RAD2DEG = 180.0 / np.pi


@dataclass(frozen=True)
class LinearJointModel:
    H_hat: float
    J: float = 1.0
    B: float = 1.0
    K: float = 300.0 * RAD2DEG
    L: float = 100.0

    def __post_init__(self):
        if min(self.H_hat, self.J, self.K, self.L) <= 0:
            raise ValueError("H_hat, J, K and L must be positive")
        if self.B < 0:
            raise ValueError("B must be non-negative")

    @classmethod
    def from_parameters(cls, geometry: ArmGeometry = ArmGeometry(), J: float = 1.0,
                        friction: FrictionParams = FrictionParams(),
                        hysteresis: HysteresisParams = HysteresisParams(), L: float = 100.0,
                        q=(0.0, 0.0)) -> LinearJointModel:
        """Ĥ = h11 at pose ``q`` (outstretched by default); K from the
        virgin-origin slope k1 in N·m/rad."""
        H = TwoLinkArm(geometry).inertia_matrix(q)[0, 0]
        return cls(H_hat=float(H), J=J, B=friction.B, K=hysteresis.k1 * RAD2DEG, L=L)

    @property
    def link(self) -> np.ndarray:
        return np.array([self.K, 0.0, self.H_hat])

    @property
    def motor(self) -> np.ndarray:
        return np.array([self.K, self.B, self.J])

    @property
    def lag(self) -> np.ndarray:
        return np.array([1.0, 1.0 / self.L])


class PolynomialR(np.ndarray):
    """Real polynomial, ascending coefficients, trailing zeros trimmed."""

    def __new__(cls, coeffs):
        c = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
        if c.size == 0:
            raise ValueError("degenerate (all-zero) polynomial")
        return c.view(cls)

    @property
    def degree(self) -> int:
        return len(self) - 1

    def __call__(self, s):
        return P.polyval(s, np.asarray(self))


def polynomial_roots(p) -> np.ndarray:
    """Companion-matrix roots, polished by one Newton step each."""
    p = PolynomialR(p)
    if p.degree < 1:
        raise ValueError("polynomial must have degree >= 1")
    c = np.asarray(p)
    roots = P.polyroots(c).astype(complex)
    dc = P.polyder(c)
    for i, r in enumerate(roots):
        d = P.polyval(r, dc)
        if d != 0:
            cand = r - P.polyval(r, c) / d
            if abs(P.polyval(cand, c)) < abs(P.polyval(r, c)):
                roots[i] = cand
    if not np.all(np.isfinite(roots)):
        raise ArithmeticError("root finder did not converge")
    resid = np.abs(P.polyval(roots, c))
    if resid.max() > 1e-8 * np.abs(c).max():
        raise ArithmeticError(f"root residual {resid.max():.3g} above bound")
    return roots


def plant_numerator(m: LinearJointModel) -> PolynomialR:
    return PolynomialR(m.link)


def plant_denominator(m: LinearJointModel) -> PolynomialR:
    return PolynomialR(P.polysub(P.polymul(m.link, m.motor), [m.K**2]))


def nominal_poles_zeros(m: LinearJointModel) -> tuple[np.ndarray, np.ndarray]:
    """Poles and zeros of theta(s)/u(s) without torsion feedback."""
    return polynomial_roots(plant_denominator(m)), polynomial_roots(plant_numerator(m))


def characteristic_polynomial_gain_form(m: LinearJointModel, Kp: float) -> PolynomialR:
    """K^2 (s/L + 1) + Kp [K - Pl ((s/L + 1) Pm - 1)]."""
    if Kp < 0:
        raise ValueError("Kp must be non-negative")
    inner = P.polysub(P.polymul(m.lag, m.motor), [1.0])
    num = P.polysub([m.K], P.polymul(m.link, inner))
    return PolynomialR(P.polyadd(m.K**2 * m.lag, Kp * num))


def characteristic_polynomial_derived(m: LinearJointModel, Kp: float) -> PolynomialR:
    """(s/L + 1)(Pm Pl - K^2) - Kp Ĥ s^2, from eliminating q between the
    link equation and the motor equation closed by u = Kp*d_est."""
    if Kp < 0:
        raise ValueError("Kp must be non-negative")
    return PolynomialR(P.polysub(P.polymul(m.lag, plant_denominator(m)), [0.0, 0.0, Kp * m.H_hat]))


def _match(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    cost = np.abs(prev[:, None] - new[None, :])
    _, col = linear_sum_assignment(cost)
    return new[col]


def root_locus(m: LinearJointModel, Kp_grid, form: str = "derived") -> list[tuple[float, np.ndarray]]:
    """Roots along ``Kp_grid``; column i of consecutive entries is one branch."""
    grid = np.asarray(Kp_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("Kp grid must be a sorted list of positive gains")
    poly = {"derived": characteristic_polynomial_derived, "gain_form": characteristic_polynomial_gain_form}[form]
    out, prev = [], None
    for kp in grid:
        r = polynomial_roots(poly(m, kp))
        r = np.sort_complex(r) if prev is None or len(prev) != len(r) else _match(prev, r)
        out.append((float(kp), r))
        prev = r
    return out


def critical_branch(locus) -> np.ndarray:
    """The non-real branch closest to the imaginary axis at the first grid
    point, upper half-plane member, followed across the sweep."""
    first = locus[0][1]
    cand = [i for i, r in enumerate(first) if r.imag > 1e-9]
    if not cand:
        raise ValueError("locus has no complex branch")
    i = min(cand, key=lambda k: abs(first[k].real))
    return np.array([r[i] for _, r in locus])
