"""Tests for the episode metrics."""

import unittest

import numpy as np
import pandas as pd

from flexpm.harness.metrics import (
    actuator_energy,
    compute_metrics,
    failure_record,
    log_columns,
    monotone_with_tolerance,
    window_mae_frame,
)
from flexpm.harness.trajectory import DWELL, Trajectory, TrajectorySpec


def _log(rows=101):
    t = np.linspace(0.0, 1.0, rows)
    frame = pd.DataFrame(0.0, index=range(rows), columns=log_columns(1))
    frame["t"] = t
    frame["x_d"] = 0.1
    frame["x"] = 0.1 - 0.003
    frame["y_d"] = 0.0
    frame["y"] = 0.004
    frame["w1"] = np.where(t >= 0.5, 0.002, 0.01)
    frame["tau1"] = 2.0
    frame["qa_dot1"] = -0.5 * t
    frame["tau2"] = -3.0
    frame["V"] = 1.0 - t
    return frame


class TestMetrics(unittest.TestCase):
    """Tests for compute_metrics and its helpers."""

    def test_columns(self):
        """Test the log schema for two plant modes."""
        columns = log_columns(2)
        self.assertEqual(columns[:4], ["t", "x_d", "y_d", "theta_d"])
        self.assertIn("qf3_2", columns)
        self.assertEqual(columns[-1], "V")
        self.assertEqual(len(columns), 1 + 9 + 3 + 6 + 3 + 3 + 1)

    def test_energy(self):
        """Test the trapezoidal absolute actuator power integral."""
        energy = actuator_energy(_log())
        self.assertAlmostEqual(energy[0], 0.5, places=12)
        self.assertEqual(energy[1], 0.0)
        np.testing.assert_array_equal(actuator_energy(_log(1)), 0.0)

    def test_window_metrics(self):
        """Test MAE, position MAE and dwell deformation RMS."""
        metrics = compute_metrics(_log(), {"dwell": [(0.5, 2.0)]})
        np.testing.assert_allclose(metrics.mae["all"], [0.003, 0.004, 0.0])
        self.assertAlmostEqual(metrics.position_mae["dwell"], 0.005)
        np.testing.assert_allclose(metrics.deformation_rms, [0.002, 0.0, 0.0])
        np.testing.assert_allclose(metrics.torque_peak, [2.0, 3.0, 0.0])
        self.assertAlmostEqual(metrics.lyapunov_final, 0.0)
        self.assertAlmostEqual(metrics.duration, 1.0)
        self.assertAlmostEqual(metrics.energy_total, 0.5)
        frame = window_mae_frame("proposed", metrics)
        self.assertEqual(list(frame["window"]), ["all", "dwell"])
        self.assertEqual(list(frame.columns), ["case", "window", "mae_x", "mae_y", "mae_theta", "position_mae"])

    def test_empty_window(self):
        """Test a window with no samples reports NaN rather than perfect tracking."""
        metrics = compute_metrics(_log(), {"dwell": [(5.0, 6.0)]})
        self.assertTrue(np.isnan(metrics.position_mae["dwell"]))
        self.assertTrue(np.all(np.isnan(metrics.mae["dwell"])))
        self.assertTrue(np.all(np.isnan(metrics.deformation_rms)))
        self.assertFalse(metrics.position_mae["dwell"] <= 0.2 * 1.0)

    def test_dwell_shorter_than_settle_offset(self):
        """Test a dwell shorter than the settle offset leaves no dwell samples to score."""
        spec = TrajectorySpec(waypoints=[[0.0, 0.0], [0.1, 0.0]], move_time=2.0, dwell_time=0.3, return_to_start=False)
        windows = {"dwell": Trajectory(spec).windows(DWELL, 0.5)}
        self.assertEqual(windows["dwell"], [])
        metrics = compute_metrics(_log(), windows)
        self.assertTrue(np.isnan(metrics.position_mae["dwell"]))
        self.assertTrue(np.all(np.isnan(metrics.deformation_rms)))

    def test_empty_log(self):
        """Test an empty log gives NaN errors and no energy."""
        metrics = compute_metrics(pd.DataFrame(columns=log_columns(1)), {"dwell": [(0.0, 1.0)]})
        self.assertTrue(np.isnan(metrics.position_mae["dwell"]))
        self.assertTrue(np.isnan(metrics.position_mae["all"]))
        self.assertEqual(metrics.energy_total, 0.0)

    def test_monotone(self):
        """Test the one-small-inversion rule."""
        self.assertTrue(monotone_with_tolerance([1.0, 2.0, 3.0]))
        self.assertTrue(monotone_with_tolerance([1.0, 2.0, 1.95, 3.0]))
        self.assertFalse(monotone_with_tolerance([1.0, 2.0, 1.95, 3.0, 2.95]))
        self.assertFalse(monotone_with_tolerance([1.0, 2.0, 1.5]))
        self.assertTrue(monotone_with_tolerance([]))
        self.assertFalse(monotone_with_tolerance([1.0, float("nan"), 3.0]))
        self.assertFalse(monotone_with_tolerance([float("nan")]))

    def test_failure_record(self):
        """Test failure rows carry time, stage and message."""
        record = failure_record(1.25, "plant", ValueError("boom"))
        self.assertEqual(record, {"t": "1.250000", "stage": "plant", "error": "boom"})
        self.assertEqual(failure_record(0.0, "done", None)["error"], "")


if __name__ == "__main__":
    unittest.main()
