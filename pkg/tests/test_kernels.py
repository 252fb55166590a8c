import numpy as np
import pytest

from flexjoint import _kernels_py as py
from flexjoint import kernels
from flexjoint.nonlinear import joint_vector
from flexjoint.plant import PlantParams, PlantState, plant_derivatives

compiled = pytest.importorskip("flexjoint._kernels", reason="extension not built")

P = PlantParams()
JOINT = joint_vector(P.friction[0], P.hysteresis[0], P.J[0], P.D[0])


def random_state(rng):
    s = np.empty(12)
    s[0:2] = rng.uniform(-np.pi, np.pi, 2)
    s[2:4] = rng.normal(scale=2.0, size=2)
    s[4:6] = s[0:2] + np.deg2rad(rng.uniform(-0.2, 0.2, 2))
    s[6:8] = rng.normal(scale=2.0, size=2)
    s[8:10] = rng.uniform(-0.01, 0.01, 2)
    s[10:12] = rng.uniform(-0.2, 0.2, 2)
    return s


def test_selected_backend():
    assert kernels.COMPILED == (kernels.BACKEND_NAME == "compiled")
    assert py.NPARAM == len(P.packed()) == 33


def test_rhs_matches_model_interface(rng):
    for _ in range(20):
        s = random_state(rng)
        u = rng.normal(scale=50, size=2)
        ref = plant_derivatives(PlantState.from_vector(s), u, P)
        for mod in (py, compiled):
            assert np.allclose(mod.plant_rhs(s, u, P.packed()), ref, rtol=1e-10, atol=1e-9)


def test_integrate_agrees(rng):
    s0 = random_state(rng)
    u = np.array([30.0, -5.0])
    a, b = s0.copy(), s0.copy()
    out_a = py.integrate(a, u, P.packed(), 1e-4, 10, 20)
    out_b = compiled.integrate(b, u, P.packed(), 1e-4, 10, 20)
    assert out_a.shape == (20, 12)
    assert np.allclose(out_a, out_b, rtol=1e-12, atol=1e-12)
    assert np.array_equal(a, out_a[-1]) and np.array_equal(b, out_b[-1])


def test_integrate_rejects_blow_up():
    s = np.zeros(12)
    s[6] = 1e200
    for mod in (py, compiled):
        with pytest.raises(FloatingPointError):
            mod.integrate(s.copy(), np.zeros(2), P.packed(), 1e-4, 1, 5)


def test_inverse_path_agrees(rng):
    tau = np.cumsum(rng.normal(scale=4.0, size=500))
    a = py.inverse_path(tau, 0.0, 0.0, 0.0, JOINT)
    b = compiled.inverse_path(tau, 0.0, 0.0, 0.0, JOINT)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-14)


def test_inverse_step_agrees():
    for tau in (-60.0, 0.5, 98.0):
        assert np.allclose(py.inverse_step(0.001, 0.01, 0.01, tau, JOINT),
                           compiled.inverse_step(0.001, 0.01, 0.01, tau, JOINT), rtol=1e-12, atol=1e-15)


def test_advance_path_agrees():
    d = 0.25 * np.sin(np.linspace(0, 4 * np.pi, 800))
    a = py.advance_path(d, 0.0, 0.0, 0.0, JOINT)
    b = compiled.advance_path(d, 0.0, 0.0, 0.0, JOINT)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-15)


def test_march_rate_agrees(rng):
    rate = rng.normal(scale=5.0, size=400)
    a = py.march_rate(rate, 1e-4, 0.0, 0.0, JOINT)
    b = compiled.march_rate(rate, 1e-4, 0.0, 0.0, JOINT)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=1e-12, atol=1e-15)


def test_march_rate_matches_advance_for_monotone_input():
    # rate independence: the same monotone torsion path, time or torsion stepped
    rate = np.full(1000, 2.0)
    xt, xit = py.march_rate(rate, 1e-4, 0.0, 0.0, JOINT)
    d = np.cumsum(rate * 1e-4)
    xa, xia = py.advance_path(d, 0.0, 0.0, 0.0, JOINT)
    assert np.allclose(xt, xa, atol=1e-10)
    assert np.allclose(xit, xia, atol=1e-10)
