"""Tests for the case studies and their acceptance checks."""

import unittest
from unittest import mock

import numpy as np
import pandas as pd

from flexpm.control.control_config import ControlLawConfig
from flexpm.core.mechanism_config import reference_params
from flexpm.dynamics.plant import PlantConfig
from flexpm.errors import AcceptanceError
from flexpm.harness.cases import CaseOutcome, CaseSetup, _enforce, compare_models, dwell_decay, run_case, run_episodes, sweep_observer_rate
from flexpm.harness.episode import EpisodeResult
from flexpm.harness.metrics import EpisodeMetrics, failure_record
from flexpm.harness.trajectory import Trajectory, TrajectorySpec


def _result(t, V, failure=None):
    log = pd.DataFrame({"t": t, "V": V})
    return EpisodeResult(name="case", log=log, metrics=EpisodeMetrics(), failure=failure)


class TestDwellDecay(unittest.TestCase):
    """Tests for dwell_decay."""

    def setUp(self):
        self.trajectory = Trajectory(TrajectorySpec(waypoints=[[0.0, 0.0]], move_time=0.1, dwell_time=0.2))
        self.t = np.linspace(0.0, 0.3, 31)

    def test_decaying(self):
        """Test a V that falls through the dwell passes."""
        self.assertTrue(dwell_decay(_result(self.t, np.exp(-10.0 * self.t)), self.trajectory))

    def test_growing(self):
        """Test a V that grows through the dwell fails."""
        self.assertFalse(dwell_decay(_result(self.t, 1.0 + self.t), self.trajectory))

    def test_below_floor(self):
        """Test growth below the floor is ignored."""
        self.assertTrue(dwell_decay(_result(self.t, 1e-12 * (1.0 + self.t)), self.trajectory))

    def test_not_finite_or_failed(self):
        """Test NaN values and failed episodes fail."""
        V = np.exp(-self.t)
        V[5] = np.nan
        self.assertFalse(dwell_decay(_result(self.t, V), self.trajectory))
        failure = failure_record(0.1, "plant", RuntimeError("diverged"))
        self.assertFalse(dwell_decay(_result(self.t, np.exp(-self.t), failure), self.trajectory))


class TestCaseOutcome(unittest.TestCase):
    """Tests for CaseOutcome and check enforcement."""

    def test_checks(self):
        """Test failed checks are listed and raised only when strict."""
        outcome = CaseOutcome([], {"mae": 1.0}, {"completed": True, "mae_ratio": False})
        self.assertFalse(outcome.passed)
        self.assertEqual(outcome.failed_checks(), ["mae_ratio"])
        self.assertIs(_enforce(outcome, "case", strict=False), outcome)
        with self.assertRaises(AcceptanceError) as context:
            _enforce(outcome, "case", strict=True)
        self.assertEqual(context.exception.code, "CheckFailed")
        self.assertEqual(context.exception.exit_code, 3)

    def test_empty_checks_pass(self):
        """Test an outcome without checks passes."""
        self.assertTrue(CaseOutcome([]).passed)

    def test_sweep_ignores_truncated_episodes(self):
        """Test a truncated episode fails the sweep even when its partial MAE looks monotone."""
        t = np.linspace(0.0, 0.3, 31)
        results = []
        for mae, failure in ((1e-4, None), (2e-4, failure_record(0.2, "plant", RuntimeError("diverged")))):
            result = _result(t, np.exp(-t), failure)
            result.metrics.position_mae["dwell"] = mae
            results.append(result)
        setup = CaseSetup(
            params=reference_params(),
            plant=PlantConfig(n_modes=1, dt=1e-3),
            control=ControlLawConfig(n_ctrl=1, feedback="truth"),
            baseline=ControlLawConfig(kind="joint_pd", compensation_model="rigid", feedback="truth"),
            trajectory=Trajectory(TrajectorySpec(waypoints=[[0.0, 0.0]], move_time=0.1, dwell_time=0.2)),
        )
        with mock.patch("flexpm.harness.cases.run_episodes", return_value=results):
            outcome = sweep_observer_rate(setup, [1000.0, 100.0], strict=False)
        self.assertFalse(outcome.checks["completed"])
        self.assertFalse(outcome.checks["monotone"])
        self.assertEqual(outcome.values["mae_100hz"], 2e-4)
        with mock.patch("flexpm.harness.cases.run_episodes", return_value=results):
            with self.assertRaises(AcceptanceError):
                sweep_observer_rate(setup, [1000.0, 100.0])

    def test_nan_ratio_fails(self):
        """Test a comparison against a NaN dwell error fails."""
        proposed = _result(np.linspace(0.0, 0.3, 31), np.zeros(31))
        baseline = _result(np.linspace(0.0, 0.3, 31), np.zeros(31))
        proposed.metrics.position_mae["dwell"] = float("nan")
        baseline.metrics.position_mae["dwell"] = 1e-3
        setup = mock.Mock()
        with mock.patch("flexpm.harness.cases.run_episodes", return_value=[proposed, baseline]):
            outcome = run_case(setup, strict=False)
        self.assertFalse(outcome.checks["mae_ratio"])
        self.assertTrue(outcome.checks["completed"])


class TestRunCase(unittest.TestCase):
    """Tests for the controller comparison on a hold task."""

    def setUp(self):
        trajectory = Trajectory(TrajectorySpec(waypoints=[[0.0, 0.0]], move_time=0.02, dwell_time=0.02))
        self.setup = CaseSetup(
            params=reference_params(),
            plant=PlantConfig(n_modes=1, dt=1e-3),
            control=ControlLawConfig(n_ctrl=1, feedback="truth"),
            baseline=ControlLawConfig(kind="joint_pd", kp=200.0, kd=0.2, compensation_model="rigid", feedback="truth"),
            trajectory=trajectory,
            settle_offset=0.0,
        )

    def test_episode_order(self):
        """Test episodes come back in the order of their names."""
        results = run_episodes(self.setup, [self.setup.baseline, self.setup.control], ["first", "second"])
        self.assertEqual([r.name for r in results], ["first", "second"])
        self.assertTrue(all(r.completed for r in results))

    def test_hold_case(self):
        """Test the comparison reports every check and value on a hold at rest."""
        outcome = run_case(self.setup, strict=False)
        self.assertEqual(set(outcome.checks), {"completed", "mae_ratio", "deformation_ratio", "energy"})
        self.assertTrue(outcome.checks["completed"])
        self.assertLess(outcome.values["proposed_mae"], 1e-9)
        self.assertEqual([r.name for r in outcome.results], ["proposed", "joint_pd"])
        self.assertIn("baseline_energy", outcome.values)

    def test_compare_models(self):
        """Test every compensation model runs and is compared with the developed one."""
        outcome = compare_models(self.setup, strict=False)
        self.assertEqual([r.name for r in outcome.results], ["developed", "rigid", "clamped_pinned"])
        self.assertEqual(set(outcome.checks), {"completed", "developed_vs_rigid", "developed_vs_clamped_pinned"})
        self.assertTrue(outcome.checks["completed"])
        self.assertLess(outcome.values["developed_mae"], 1e-9)

    def test_sweep_observer_rate(self):
        """Test the sweep orders rates from fastest to slowest and checks each stable rate."""
        outcome = sweep_observer_rate(self.setup, [500.0, 1000.0], strict=False)
        self.assertEqual([r.name for r in outcome.results], ["observer_1000hz", "observer_500hz"])
        self.assertEqual(set(outcome.values), {"mae_1000hz", "mae_500hz"})
        self.assertEqual(set(outcome.checks), {"completed", "monotone", "stable_1000hz", "stable_500hz"})
        self.assertTrue(outcome.checks["completed"])


if __name__ == "__main__":
    unittest.main()
