"""Tests for inverse kinematics and the velocity Jacobians."""

import dataclasses
import unittest

import numpy as np

from flexpm.core.geometry import branch_unit_vectors, platform_corner_positions
from flexpm.core.kinematics import (
    DEFAULT_KINEMATICS,
    AssemblyMode,
    KinematicsConfig,
    compute_jacobians,
    forward_position,
    inverse_kinematics,
    jacobian_J,
    jacobian_S,
    jacobian_S_dot,
    loop_closure_residual,
    passive_rates,
)
from flexpm.core.mechanism_config import PlatformPose, reference_params
from flexpm.core.modal_basis import ModalBasis
from flexpm.core.state import GeneralizedState
from flexpm.errors import UnreachablePoseError, ValidationError


class TestInverseKinematics(unittest.TestCase):
    """Tests for inverse_kinematics."""

    def setUp(self):
        self.params = reference_params()
        self.basis = ModalBasis.create("CF", self.params.l1, 3)
        self.q_f = np.array([2e-3, -1e-4, 1e-5, -1.5e-3, 5e-5, 0.0, 1e-3, 0.0, -2e-5])

    def test_rigid_centre_symmetry(self):
        """Test the centred rigid pose gives the same angles in every branch."""
        solution = inverse_kinematics(self.params, self.basis, PlatformPose())
        self.assertAlmostEqual(solution.q_a[0], solution.q_a[1], places=10)
        self.assertAlmostEqual(solution.q_a[0], solution.q_a[2], places=10)
        np.testing.assert_allclose(solution.tip_deflection, 0.0)
        np.testing.assert_allclose(solution.beta1, 0.0)

    def test_round_trip(self):
        """Test forward position of the solved angles closes every loop."""
        for pose in (PlatformPose(), PlatformPose(0.1, 0.0, 0.0), PlatformPose(-0.1, 0.1, 0.05)):
            solution = inverse_kinematics(self.params, self.basis, pose, self.q_f)
            chains = forward_position(self.params, self.basis, solution.q_a, solution.q_p, self.q_f)
            np.testing.assert_allclose(chains, platform_corner_positions(self.params, pose), atol=1e-9)
            self.assertLess(loop_closure_residual(self.params, self.basis, pose, self.q_f, solution), 1e-9)

    def test_deflection_changes_angles(self):
        """Test a bent link needs a different actuated angle than a straight one."""
        pose = PlatformPose(0.05, 0.02, 0.0)
        rigid = inverse_kinematics(self.params, self.basis, pose)
        bent = inverse_kinematics(self.params, self.basis, pose, self.q_f)
        self.assertGreater(np.max(np.abs(rigid.q_a - bent.q_a)), 1e-4)
        np.testing.assert_allclose(bent.beta3, bent.beta2 - bent.beta1)

    def test_assembly_mode(self):
        """Test the opposite elbow gives a different but closed solution."""
        pose = PlatformPose(0.02, -0.03, 0.0)
        config = KinematicsConfig(assembly=AssemblyMode((-1, 1, 1)))
        default = inverse_kinematics(self.params, self.basis, pose)
        flipped = inverse_kinematics(self.params, self.basis, pose, config=config)
        self.assertGreater(abs(default.q_a[0] - flipped.q_a[0]), 1e-3)
        self.assertLess(loop_closure_residual(self.params, self.basis, pose, None, flipped), 1e-9)

    def test_unreachable(self):
        """Test a pose outside the workspace raises UnreachablePoseError."""
        with self.assertRaises(UnreachablePoseError):
            inverse_kinematics(self.params, self.basis, PlatformPose(2.0, 0.0, 0.0))

    def test_large_deflection(self):
        """Test a tip deflection beyond a fifth of the link length is rejected."""
        q_f = np.zeros(9)
        q_f[0] = 0.2 * self.params.l1
        with self.assertRaises(ValidationError):
            inverse_kinematics(self.params, self.basis, PlatformPose(), q_f)

    def test_bad_assembly(self):
        """Test elbow signs other than +1 and -1 are rejected."""
        with self.assertRaises(ValidationError):
            AssemblyMode((1, 0, 1))


class TestJacobians(unittest.TestCase):
    """Tests for compute_jacobians and passive_rates."""

    def setUp(self):
        self.params = reference_params()
        self.basis = ModalBasis.create("CF", self.params.l1, 2)
        self.q = np.array([0.03, -0.02, 0.04, 1e-3, -2e-4, -5e-4, 1e-4, 8e-4, 0.0])
        self.q_dot = np.array([0.1, -0.05, 0.2, 0.01, -0.02, 0.005, 0.0, -0.01, 0.02])
        self.state = GeneralizedState.from_vectors(self.q, self.q_dot)

    def _joints(self, q):
        solution = inverse_kinematics(self.params, self.basis, PlatformPose.from_array(q[:3]), q[3:])
        return np.concatenate((solution.q_a, solution.q_p))

    def test_single_map_helpers(self):
        """Test the single-map helpers agree with compute_jacobians."""
        jacobians = compute_jacobians(self.params, self.basis, self.state, with_s_dot=True)
        np.testing.assert_array_equal(jacobian_J(self.params, self.basis, self.state), jacobians.J)
        np.testing.assert_array_equal(jacobian_S(self.params, self.basis, self.state), jacobians.S)
        np.testing.assert_array_equal(jacobian_S_dot(self.params, self.basis, self.state), jacobians.S_dot)
        self.assertEqual(jacobians.S.shape, (12, 9))

    def test_against_finite_differences(self):
        """Test J and S columns match central differences of the inverse kinematics."""
        jacobians = compute_jacobians(self.params, self.basis, self.state)
        step = 1e-6
        for k in range(self.q.size):
            offset = np.zeros(self.q.size)
            offset[k] = step
            column = (self._joints(self.q + offset) - self._joints(self.q - offset)) / (2 * step)
            np.testing.assert_allclose(jacobians.J[:3, k], column[:3], atol=1e-5, err_msg=f"J column {k}")
            np.testing.assert_allclose(jacobians.S[:6, k], column, atol=1e-5, err_msg=f"S column {k}")
        np.testing.assert_array_equal(jacobians.J[3:, 3:], np.eye(6))
        np.testing.assert_array_equal(jacobians.J[3:, :3], 0.0)
        np.testing.assert_array_equal(jacobians.S[6:, 3:], np.eye(6))
        self.assertGreater(jacobians.condition, 1.0)

    def test_s_dot_methods_agree(self):
        """Test the analytic and finite-difference S_dot coincide."""
        analytic = compute_jacobians(self.params, self.basis, self.state, with_s_dot=True).S_dot
        config = dataclasses.replace(DEFAULT_KINEMATICS, s_dot_method="finite_difference")
        numeric = compute_jacobians(self.params, self.basis, self.state, config, with_s_dot=True).S_dot
        np.testing.assert_allclose(analytic, numeric, atol=1e-5 * max(1.0, np.max(np.abs(analytic))))

    def test_s_dot_at_rest(self):
        """Test S_dot vanishes for a motionless state."""
        state = GeneralizedState.from_vectors(self.q)
        np.testing.assert_allclose(compute_jacobians(self.params, self.basis, state, with_s_dot=True).S_dot, 0.0, atol=1e-12)

    def test_passive_rates_match_jacobian(self):
        """Test the velocity projection gives the same joint rates as J."""
        jacobians = compute_jacobians(self.params, self.basis, self.state)
        q_a_dot, omega = passive_rates(self.params, self.basis, self.state)
        np.testing.assert_allclose(q_a_dot, jacobians.J[:3] @ self.q_dot, atol=1e-9)
        self.assertTrue(np.all(np.isfinite(omega)))

    def test_order_mismatch(self):
        """Test a state whose modal order differs from the basis is rejected."""
        with self.assertRaises(ValidationError):
            compute_jacobians(self.params, ModalBasis.create("CF", self.params.l1, 3), self.state)


class TestGeometry(unittest.TestCase):
    """Tests for the branch unit vectors."""

    def setUp(self):
        self.params = reference_params()

    def test_unit_vectors(self):
        """Test the link direction and its normal for each branch."""
        u, v = branch_unit_vectors(self.params, 0.0, 1)
        np.testing.assert_allclose(u, [1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(v, [0.0, 1.0], atol=1e-15)
        u, v = branch_unit_vectors(self.params, np.pi / 2, 1)
        np.testing.assert_allclose(u, [0.0, 1.0], atol=1e-15)
        np.testing.assert_allclose(v, [-1.0, 0.0], atol=1e-15)
        u, _ = branch_unit_vectors(self.params, 0.0, 2)
        np.testing.assert_allclose(u, [np.cos(2 * np.pi / 3), np.sin(2 * np.pi / 3)])

    def test_orthonormal(self):
        """Test u and v are orthonormal for arbitrary angles."""
        for branch in (1, 2, 3):
            u, v = branch_unit_vectors(self.params, 0.37 * branch, branch)
            self.assertAlmostEqual(float(np.linalg.norm(u)), 1.0)
            self.assertAlmostEqual(float(u @ v), 0.0)
            self.assertAlmostEqual(float(u[0] * v[1] - u[1] * v[0]), 1.0)
        with self.assertRaises(ValidationError):
            branch_unit_vectors(self.params, 0.0, 4)


if __name__ == "__main__":
    unittest.main()
