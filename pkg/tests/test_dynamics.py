import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from flexjoint.dynamics import ArmGeometry, ManipulatorModel, TwoLinkArm

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
rates = st.floats(-10.0, 10.0, allow_nan=False)


def lagrangian_model(mass2_ratio=1.0):
    """H, C, G of the planar arm from a symbolic Lagrangian: link 1 mass m,
    link 2 mass r*m, COMs at l/2, both links with inertia I about the COM."""
    q1, q2, d1, d2 = sp.symbols("q1 q2 d1 d2", real=True)
    m, l, I, g, r = sp.Rational(10), sp.Rational(1, 2), sp.Rational(1, 2), sp.Rational(49, 5), sp.nsimplify(mass2_ratio)
    m2 = r * m
    x1, z1 = l / 2 * sp.cos(q1), l / 2 * sp.sin(q1)
    x2 = l * sp.cos(q1) + l / 2 * sp.cos(q1 + q2)
    z2 = l * sp.sin(q1) + l / 2 * sp.sin(q1 + q2)
    q, qd = sp.Matrix([q1, q2]), sp.Matrix([d1, d2])

    def vel2(x, z):
        vx = (sp.Matrix([x]).jacobian(q) * qd)[0]
        vz = (sp.Matrix([z]).jacobian(q) * qd)[0]
        return vx**2 + vz**2

    T = (m * vel2(x1, z1) + m2 * vel2(x2, z2) + I * d1**2 + I * (d1 + d2) ** 2) / 2
    V = m * g * z1 + m2 * g * z2
    H = sp.hessian(T, qd).applyfunc(sp.simplify)
    G = sp.Matrix([V]).jacobian(q).T
    C = sp.zeros(2, 1)
    for i in range(2):
        C[i] = sum(
            sp.Rational(1, 2) * (sp.diff(H[i, j], q[k]) + sp.diff(H[i, k], q[j]) - sp.diff(H[j, k], q[i])) * qd[j] * qd[k]
            for j in range(2) for k in range(2)
        )
    args = (q1, q2, d1, d2)
    return (sp.lambdify(args, H, "numpy"), sp.lambdify(args, C, "numpy"), sp.lambdify(args, G, "numpy"),
            sp.lambdify(args[:2], V, "numpy"))


@pytest.fixture(scope="module")
def oracle():
    return lagrangian_model(1.0)


class TestPrintedInertia:
    def test_outstretched(self, printed_arm):
        assert np.allclose(printed_arm.inertia_matrix([0, 0]), [[4.4375, 2.375], [2.375, 1.125]], atol=1e-12)

    def test_elbow_right_angle(self, printed_arm):
        H = printed_arm.inertia_matrix([0.7, np.pi / 2])
        assert H[0, 0] == pytest.approx(3.1875, abs=1e-12)
        assert H[0, 1] == pytest.approx(1.125, abs=1e-12)

    def test_printed_form_is_indefinite_near_straight_arm(self, printed_arm):
        assert np.linalg.eigvalsh(printed_arm.inertia_matrix([0, 0])).min() < 0

    def test_inverse_dynamics_column(self, printed_arm):
        tau = printed_arm.rigid_inverse_dynamics([0, 0], [0, 0], [1, 0])
        assert np.allclose(tau, [98 + 4.4375, 24.5 + 2.375], atol=1e-12)


class TestAgainstLagrangian:
    @pytest.mark.parametrize("q", [[0, 0], [0.3, -1.2], [-np.pi / 2, 0.4], [2.0, np.pi]])
    def test_inertia(self, arm, oracle, q):
        assert np.allclose(arm.inertia_matrix(q), oracle[0](q[0], q[1], 0, 0), atol=1e-12)

    def test_printed_h11_is_half_mass_lagrangian(self, printed_arm):
        H, *_ = lagrangian_model(0.5)
        for q2 in (0.0, 0.9, 2.5):
            assert printed_arm.inertia_matrix([0, q2])[0, 0] == pytest.approx(H(0, q2, 0, 0)[0, 0], abs=1e-12)

    @pytest.mark.parametrize("q,qd", [([0.1, 0.5], [1.0, -2.0]), ([1.0, np.pi / 2], [1.0, 0.0]), ([-1, 2.2], [0.3, 3.0])])
    def test_coriolis(self, arm, oracle, q, qd):
        assert np.allclose(arm.coriolis_vector(q, qd), oracle[1](*q, *qd).ravel(), atol=1e-12)

    @pytest.mark.parametrize("q", [[0, 0], [0.4, 1.1], [-np.pi / 2, 0], [0, np.pi]])
    def test_gravity(self, arm, oracle, q):
        assert np.allclose(arm.gravity_vector(q), oracle[2](*q, 0, 0).ravel(), atol=1e-12)

    def test_potential(self, arm, oracle):
        for q in ([0, 0], [0.3, -0.2], [2.0, 1.0]):
            assert arm.potential_energy(q) == pytest.approx(float(oracle[3](*q)), abs=1e-12)


class TestExamples:
    def test_gravity_values(self, arm):
        assert np.allclose(arm.gravity_vector([0, 0]), [98.0, 24.5], atol=1e-12)
        assert np.allclose(arm.gravity_vector([-np.pi / 2, 0]), [0, 0], atol=1e-12)
        assert np.allclose(arm.gravity_vector([0, np.pi]), [49.0, -24.5], atol=1e-12)

    def test_coriolis_values(self, arm):
        assert np.allclose(arm.coriolis_vector([0.2, 0.7], [0, 0]), 0)
        assert np.allclose(arm.coriolis_vector([0.2, 0.0], [3.0, -1.0]), 0)
        assert np.allclose(arm.coriolis_vector([0, np.pi / 2], [1, 0]), [0, 1.25], atol=1e-12)

    def test_inverse_dynamics(self, arm):
        assert np.allclose(arm.rigid_inverse_dynamics([-np.pi / 2, 0], [0, 0], [0, 0]), 0, atol=1e-12)
        assert np.allclose(arm.rigid_inverse_dynamics([0, 0], [0, 0], [0, 0]), [98, 24.5], atol=1e-12)

    def test_forward_kinematics(self, arm):
        assert np.allclose(arm.forward_kinematics([0, 0]), (1.0, 0.0), atol=1e-15)
        assert np.allclose(arm.forward_kinematics([-np.pi / 2, 0]), (0.0, -1.0), atol=1e-15)
        assert np.allclose(arm.forward_kinematics([0, np.pi / 2]), (0.5, 0.5), atol=1e-15)

    def test_shape_errors(self, arm):
        with pytest.raises(ValueError):
            arm.inertia_matrix([0, 0, 0])
        with pytest.raises(ValueError):
            arm.rigid_inverse_dynamics([0, 0], [0], [0, 0])

    def test_geometry_validation(self):
        with pytest.raises(ValueError):
            ArmGeometry(m=0)
        with pytest.raises(ValueError):
            ArmGeometry(g=-1)


class TestProperties:
    def test_positive_definite_on_grid(self, arm):
        for q2 in np.linspace(-np.pi, np.pi, 721):
            H = arm.inertia_matrix([0.0, q2])
            assert np.array_equal(H, H.T)
            assert np.linalg.eigvalsh(H).min() > 0

    @given(angles, angles)
    def test_symmetric(self, q1, q2):
        H = TwoLinkArm().inertia_matrix([q1, q2])
        assert H[0, 1] == H[1, 0]

    @given(angles, angles)
    def test_gravity_is_potential_gradient(self, q1, q2):
        arm = TwoLinkArm()
        h = 1e-7
        grad = [(arm.potential_energy([q1 + h, q2]) - arm.potential_energy([q1 - h, q2])) / (2 * h),
                (arm.potential_energy([q1, q2 + h]) - arm.potential_energy([q1, q2 - h])) / (2 * h)]
        G = arm.gravity_vector([q1, q2])
        assert np.allclose(grad, G, rtol=1e-4, atol=1e-4 * np.abs(G).max())

    @given(angles, angles)
    def test_reach(self, q1, q2):
        x, z = TwoLinkArm().forward_kinematics([q1, q2])
        assert np.hypot(x, z) <= 1.0 + 1e-12

    @settings(max_examples=30)
    @given(angles, angles, rates, rates, rates, rates)
    def test_power_balance(self, q1, q2, v1, v2, a1, a2):
        # d/dt(1/2 qd' H qd) = qd'(tau - C - G) + 1/2 qd' Hdot qd along q(t) = q0 + v t + a t^2/2
        arm = TwoLinkArm()
        q0, v, a = np.array([q1, q2]), np.array([v1, v2]), np.array([a1, a2])
        tau = arm.rigid_inverse_dynamics(q0, v, a)
        dt = 1e-6

        def ke(t):
            return arm.kinetic_energy(q0 + v * t + 0.5 * a * t * t, v + a * t)

        lhs = (ke(dt) - ke(-dt)) / (2 * dt)
        Hd = (arm.inertia_matrix(q0 + v * dt + 0.5 * a * dt * dt) - arm.inertia_matrix(q0 - v * dt + 0.5 * a * dt * dt)) / (2 * dt)
        rhs = v @ (tau - arm.coriolis_vector(q0, v) - arm.gravity_vector(q0)) + 0.5 * v @ Hd @ v
        scale = max(1.0, abs(lhs), float(np.abs(v) @ np.abs(tau)))
        assert abs(lhs - rhs) <= 1e-6 * scale

    def test_batch_matches_rowwise(self, arm, rng):
        q, qd, qdd = (rng.normal(size=(50, 2)) for _ in range(3))
        rows = ManipulatorModel.inverse_dynamics_batch(arm, q, qd, qdd)
        assert np.allclose(arm.inverse_dynamics_batch(q, qd, qdd), rows, atol=1e-12)

    def test_forward_dynamics_inverts(self, arm, rng):
        q, qd, qdd = rng.normal(size=(3, 2))
        tau = arm.rigid_inverse_dynamics(q, qd, qdd)
        assert np.allclose(arm.forward_dynamics(q, qd, tau), qdd, atol=1e-10)
