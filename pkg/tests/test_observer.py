import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from conftest import NO_FRICTION
from flexjoint.nonlinear import (
    FrictionParams,
    HysteresisParams,
    HysteresisState,
    alpha,
    friction_torque,
    hysteresis_advance,
    hysteresis_inverse_path,
)
from flexjoint.observer import BatchObserver, ObserverGains, ObserverState, observer_step, virtual_sensor_step

TC = 1e-3
HP = (HysteresisParams(), HysteresisParams())
FREE = (NO_FRICTION, NO_FRICTION)
J = (1.0, 1.0)


def run_steps(u, thetad, gains=ObserverGains(), friction=FREE):
    """Observer fed sample by sample; u[k] was held over (t[k-1], t[k])."""
    obs, out = ObserverState(), []
    for k in range(len(thetad)):
        obs, r = observer_step(obs, u[k - 1] if k else np.zeros(2), thetad[k], TC, gains, friction, J)
        out.append(r)
    return np.array(out)


def synthetic(tau_integral, t, u_held=None):
    """Motor rate of a unit-inertia drive, no friction, driven by held u and
    loaded by the joint torque whose time integral is given."""
    u_held = np.zeros((len(t), 2)) if u_held is None else u_held
    impulse = np.vstack([np.zeros(2), np.cumsum(u_held[:-1] * TC, axis=0)])
    return 0.3 + impulse - tau_integral(t)


def lag(tau, t, L=100.0):
    sol = solve_ivp(lambda s, r: L * (tau(s) - r), (t[0], t[-1]), [0.0], t_eval=t,
                    rtol=1e-11, atol=1e-13, method="DOP853")
    return sol.y[0]


class TestObserver:
    def test_no_disturbance(self):
        fr = (FrictionParams(), FrictionParams())
        th = np.full((500, 2), 1.7)
        u = np.tile([friction_torque(1.7, fr[0])] * 2, (500, 1))
        assert np.max(np.abs(run_steps(u, th, friction=fr))) <= 1e-12

    def test_constant_step(self):
        t = np.arange(101) * TC
        th = synthetic(lambda s: 10.0 * s[:, None] * np.ones(2), t)
        r = run_steps(np.zeros((101, 2)), th)
        assert r[10, 0] == pytest.approx(10 * (1 - np.exp(-1)), abs=1e-4)
        assert r[10, 0] == pytest.approx(6.3212, abs=1e-4)
        assert np.max(np.abs(r - 10 * (1 - np.exp(-100 * t))[:, None])) <= 1e-3

    def test_trapezoid_option_is_close(self):
        t = np.arange(101) * TC
        th = synthetic(lambda s: 10.0 * s[:, None] * np.ones(2), t)
        r = run_steps(np.zeros((101, 2)), th, ObserverGains(method="trapezoid"))
        assert np.max(np.abs(r[:, 0] - 10 * (1 - np.exp(-100 * t)))) < 1e-2

    def test_sinusoid_gain_phase(self):
        w = 2 * np.pi
        t = np.arange(3001) * TC
        th = synthetic(lambda s: ((1 - np.cos(w * s)) / w)[:, None] * np.ones(2), t)
        r = run_steps(np.zeros((len(t), 2)), th)[:, 0]
        keep = t >= 1.0
        A = np.column_stack([np.sin(w * t[keep]), np.cos(w * t[keep])])
        a, b = np.linalg.lstsq(A, r[keep], rcond=None)[0]
        gain, phase = np.hypot(a, b), np.arctan2(b, a)
        H = 1.0 / (1j * w / 100.0 + 1.0)
        assert gain == pytest.approx(abs(H), rel=1e-2)
        assert phase == pytest.approx(np.angle(H), rel=1e-2)

    def test_arbitrary_torque_is_lagged(self, rng):
        # sampled-data error grows as (w*Tc)^2; tracking torques stay below 2 Hz
        f = rng.uniform(0.2, 2.0, 4)
        amp = rng.uniform(1.0, 20.0, 4)

        def tau(s):
            return 5.0 + np.sum(amp * np.sin(2 * np.pi * f * np.atleast_1d(s)[:, None]), axis=1)

        def tau_int(s):
            s = np.atleast_1d(s)
            v = 5.0 * s + np.sum(amp * (1 - np.cos(2 * np.pi * f * s[:, None])) / (2 * np.pi * f), axis=1)
            return v[:, None] * np.ones(2)

        t = np.arange(5001) * TC
        u = np.column_stack([3 * np.sin(7 * t), np.cos(2 * t)])
        th = synthetic(tau_int, t, u)
        r = run_steps(u, th)[:, 0]
        ref = lag(lambda s: tau(s)[0], t)
        assert np.sqrt(np.mean((r - ref) ** 2)) / np.sqrt(np.mean(ref**2)) <= 1e-4

    def test_steady_residual_equals_torque(self):
        fr = (FrictionParams(), FrictionParams())
        v, tq = 0.8, 42.0
        th = np.full((400, 2), v)
        u = np.full((400, 2), friction_torque(v, fr[0]) + tq)
        # constant rate means the drive torque balance holds: u - f - tau = 0
        r = run_steps(u, th, friction=fr)
        assert np.allclose(r[-1], tq, rtol=0, atol=1e-9)

    def test_first_sample_is_zero(self):
        obs, r = observer_step(ObserverState(), [5, 5], [1.0, 2.0], TC, ObserverGains(), FREE, J)
        assert np.array_equal(r, [0.0, 0.0])
        assert np.array_equal(obs.p_hat, [1.0, 2.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            observer_step(ObserverState(), [0, 0], [0, 0], 0.0, ObserverGains(), FREE, J)
        with pytest.raises(ValueError):
            ObserverGains(L=(0.0, 100.0))
        with pytest.raises(ValueError):
            ObserverGains(method="euler")

    @pytest.mark.parametrize("method", ["exact", "trapezoid"])
    def test_batch_matches_steps(self, rng, method):
        fr = (FrictionParams(), FrictionParams(Fc=8.0))
        th = np.cumsum(rng.normal(scale=0.05, size=(800, 2)), axis=0)
        u = rng.normal(scale=20.0, size=(800, 2))
        g = ObserverGains(method=method)
        r_steps = run_steps(u, th, g, fr)
        batch = BatchObserver(g, fr, J, HP, TC)
        assert np.allclose(batch.residual(u, th), r_steps, rtol=1e-12, atol=1e-9)


class TestVirtualSensor:
    def test_zero_residual(self):
        obs = ObserverState()
        for _ in range(20):
            obs, d = virtual_sensor_step(obs, [0.0, 0.0], TC, HP)
            assert np.array_equal(d, [0.0, 0.0])

    def test_step_settles_on_fixed_point(self):
        obs = ObserverState()
        for _ in range(30):
            obs, d = virtual_sensor_step(obs, [80.0, -20.0], TC, HP)
        for j, tq in enumerate((80.0, -20.0)):
            def forward(z, hp=HP[j]):
                s = hysteresis_advance(HysteresisState(), z, hp)
                return hp.w * alpha(z, hp) + (1 - hp.w) * alpha(s.x_int, hp) - tq
            ref = brentq(forward, -0.5, 0.5, xtol=1e-14)
            assert np.rad2deg(d[j]) == pytest.approx(ref, abs=1e-7)

    def test_batch_matches_steps(self, rng):
        r = np.cumsum(rng.normal(scale=3.0, size=(300, 2)), axis=0)
        obs, est = ObserverState(), []
        for k in range(len(r)):
            obs, d = virtual_sensor_step(obs, r[k], TC, HP)
            est.append(d)
        ref = np.column_stack([hysteresis_inverse_path(r[:, j], HP[j])[0] for j in range(2)])
        assert np.allclose(np.rad2deg(est), ref, rtol=1e-14, atol=0)
