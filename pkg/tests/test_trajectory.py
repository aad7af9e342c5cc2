"""Tests for the positioning trajectory."""

import unittest

import numpy as np

from flexpm.core.mechanism_config import reference_params
from flexpm.errors import ValidationError
from flexpm.harness.trajectory import DWELL, MOVING, Trajectory, TrajectorySpec, build_trajectory, check_workspace


class TestTrajectory(unittest.TestCase):
    """Tests for Trajectory."""

    def setUp(self):
        self.trajectory = Trajectory(TrajectorySpec())

    def test_default_timing(self):
        """Test the default task has five moves and five dwells over 20 s."""
        self.assertAlmostEqual(self.trajectory.duration, 20.0)
        kinds = [phase.kind for phase in self.trajectory.phases]
        self.assertEqual(kinds, [MOVING, DWELL] * 5)
        np.testing.assert_array_equal(self.trajectory.start_pose, [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(self.trajectory.end_pose, [0.0, 0.0, 0.0])

    def test_endpoints_and_rest(self):
        """Test every move starts and ends at its waypoints with zero rate."""
        for phase in self.trajectory.phases:
            if phase.kind != MOVING:
                continue
            pose, rate, _ = self.trajectory.evaluate(phase.start + 1e-12)
            np.testing.assert_allclose(pose, phase.origin, atol=1e-9)
            np.testing.assert_allclose(rate, 0.0, atol=1e-9)
            pose, rate, _ = self.trajectory.evaluate(phase.end - 1e-12)
            np.testing.assert_allclose(pose, phase.target, atol=1e-9)
            np.testing.assert_allclose(rate, 0.0, atol=1e-9)

    def test_midpoint(self):
        """Test the cubic move at half time."""
        pose, rate, acceleration = self.trajectory.evaluate(0.5)
        np.testing.assert_allclose(pose, [0.05, 0.0, 0.0])
        np.testing.assert_allclose(rate, [0.15, 0.0, 0.0])
        np.testing.assert_allclose(acceleration, 0.0, atol=1e-15)

    def test_derivatives(self):
        """Test rate and acceleration against differences of the pose."""
        h = 1e-6
        for t in (4.3, 8.7, 12.2):
            pose_minus, rate_minus, _ = self.trajectory.evaluate(t - h)
            pose_plus, rate_plus, _ = self.trajectory.evaluate(t + h)
            _, rate, acceleration = self.trajectory.evaluate(t)
            np.testing.assert_allclose(rate, (pose_plus - pose_minus) / (2 * h), atol=1e-7)
            np.testing.assert_allclose(acceleration, (rate_plus - rate_minus) / (2 * h), atol=1e-5)

    def test_hold_outside(self):
        """Test the pose is held before the start and after the end."""
        pose, rate, _ = self.trajectory.evaluate(-1.0)
        np.testing.assert_array_equal(pose, self.trajectory.start_pose)
        pose, rate, acceleration = self.trajectory.evaluate(25.0)
        np.testing.assert_array_equal(pose, self.trajectory.end_pose)
        np.testing.assert_array_equal(rate, 0.0)
        np.testing.assert_array_equal(acceleration, 0.0)

    def test_windows(self):
        """Test dwell windows are shifted by the settle offset."""
        dwell = self.trajectory.windows(DWELL, settle_offset=0.5)
        self.assertEqual(len(dwell), 5)
        self.assertEqual(dwell[0], (1.5, 4.0))
        self.assertEqual(self.trajectory.windows(MOVING, settle_offset=0.5)[1], (4.0, 5.0))
        self.assertEqual(self.trajectory.windows(DWELL, settle_offset=5.0), [])

    def test_single_waypoint(self):
        """Test one waypoint gives a hold of move plus dwell time."""
        trajectory = Trajectory(TrajectorySpec(waypoints=[[0.02, -0.01]], move_time=0.1, dwell_time=0.2))
        self.assertEqual(len(trajectory.phases), 1)
        self.assertAlmostEqual(trajectory.duration, 0.3)
        pose, rate, _ = trajectory.evaluate(0.15)
        np.testing.assert_allclose(pose, [0.02, -0.01, 0.0])
        np.testing.assert_array_equal(rate, 0.0)

    def test_orientation_waypoints(self):
        """Test three-entry waypoints carry an orientation."""
        trajectory = Trajectory(TrajectorySpec(waypoints=[[0, 0, 0], [0, 0, 0.1]], return_to_start=False, dwell_time=0.0))
        self.assertAlmostEqual(trajectory.evaluate(0.5)[0][2], 0.05)

    def test_validation(self):
        """Test malformed specifications are rejected."""
        with self.assertRaises(ValidationError):
            Trajectory(TrajectorySpec(waypoints=[]))
        with self.assertRaises(ValidationError):
            Trajectory(TrajectorySpec(move_time=0.0))
        with self.assertRaises(ValidationError):
            Trajectory(TrajectorySpec(waypoints=[[0.0]]))

    def test_build_trajectory(self):
        """Test the builder validates the waypoints and the workspace."""
        params = reference_params()
        self.assertAlmostEqual(build_trajectory(TrajectorySpec(), params).duration, 20.0)
        with self.assertRaises(ValidationError) as context:
            build_trajectory(TrajectorySpec(waypoints=[[2.0, 0.0]]), params)
        self.assertEqual(context.exception.code, "OutsideWorkspace")
        with self.assertRaises(ValidationError) as context:
            build_trajectory(TrajectorySpec(dwell_time=-1.0))
        self.assertEqual(context.exception.code, "BadTiming")

    def test_workspace(self):
        """Test the default task is reachable and a far waypoint is not."""
        params = reference_params()
        check_workspace(self.trajectory, params)
        with self.assertRaises(ValidationError) as context:
            check_workspace(Trajectory(TrajectorySpec(waypoints=[[0.0, 0.0], [2.0, 0.0]])), params)
        self.assertEqual(context.exception.code, "OutsideWorkspace")


if __name__ == "__main__":
    unittest.main()
