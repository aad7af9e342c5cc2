"""Tests for the episode reports."""

import os
import shutil
import tempfile
import importlib.util
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from flexpm.core.modal_basis import ModalBasis
from flexpm.harness.episode import EpisodeResult
from flexpm.harness.metrics import compute_metrics, failure_record, log_columns
from flexpm.harness.report import SCHEMAS, SUMMARY_FILE, emit_report, profile_frame, summary_table


def _result(name="proposed", rows=11, failure=None):
    frame = pd.DataFrame(0.0, index=range(rows), columns=log_columns(1))
    frame["t"] = np.linspace(0.0, 1.0, rows)
    frame["x_d"] = 0.01
    frame["x"] = 0.008
    frame["x_hat"] = 0.009
    frame["qf1_1"] = 1e-3
    frame["w1"] = 2e-3
    frame["tau1"] = 0.5
    metrics = compute_metrics(frame, {"dwell": [(0.5, 1.1)]})
    return EpisodeResult(name=name, log=frame, metrics=metrics, failure=failure)


class TestEmitReport(unittest.TestCase):
    """Tests for emit_report."""

    def setUp(self):
        self.out_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.out_dir)

    def test_files_and_columns(self):
        """Test every file is written with its schema."""
        basis = ModalBasis.create("CF", 0.6, 1)
        written = emit_report([_result(), _result("joint_pd")], self.out_dir, basis=basis, profile_window=(0.0, 1.0))
        self.assertEqual(set(written), set(SCHEMAS) | {SUMMARY_FILE})
        for name, columns in SCHEMAS.items():
            frame = pd.read_csv(os.path.join(self.out_dir, name))
            self.assertEqual(list(frame.columns), columns, name)
        tracking = pd.read_csv(os.path.join(self.out_dir, "tracking.csv"))
        self.assertEqual(len(tracking), 22)
        np.testing.assert_allclose(tracking["e_x"], 0.002)
        profile = pd.read_csv(os.path.join(self.out_dir, "deformation_profile.csv"))
        self.assertEqual(len(profile), 2 * 2 * 21)
        mae = pd.read_csv(os.path.join(self.out_dir, "window_mae.csv"))
        self.assertEqual(list(mae["window"]), ["all", "dwell"] * 2)
        with open(os.path.join(self.out_dir, SUMMARY_FILE), encoding="utf-8") as handle:
            text = handle.read()
        self.assertIn("proposed", text)
        self.assertIn("joint_pd", text)

    def test_without_basis(self):
        """Test the profile file holds only a header without a basis."""
        emit_report([_result()], self.out_dir)
        profile = pd.read_csv(os.path.join(self.out_dir, "deformation_profile.csv"))
        self.assertTrue(profile.empty)
        self.assertEqual(list(profile.columns), SCHEMAS["deformation_profile.csv"])

    def test_no_episodes(self):
        """Test an empty run writes header-only files and says so."""
        emit_report([], self.out_dir)
        for name, columns in SCHEMAS.items():
            frame = pd.read_csv(os.path.join(self.out_dir, name))
            self.assertTrue(frame.empty, name)
            self.assertEqual(list(frame.columns), columns)
        with open(os.path.join(self.out_dir, SUMMARY_FILE), encoding="utf-8") as handle:
            self.assertEqual(handle.read().strip(), "no episodes")


class TestReportHelpers(unittest.TestCase):
    """Tests for the summary table and the deflection profile."""

    def test_summary_status(self):
        """Test failed episodes carry their failure time and stage."""
        failed = _result("broken", failure=failure_record(0.25, "plant", RuntimeError("diverged")))
        table = summary_table([_result(), failed])
        self.assertEqual(list(table["status"]), ["ok", "failed at t=0.250000 (plant)"])
        self.assertAlmostEqual(table["dwell_mae_x"].iloc[0], 0.002)
        self.assertAlmostEqual(table["deformation_rms_max"].iloc[0], 2e-3)

    def test_profile_tip(self):
        """Test the profile ends at the modal tip deflection."""
        basis = ModalBasis.create("CF", 0.6, 1)
        profile = profile_frame(_result(), basis, (0.0, 0.0), points=5)
        self.assertEqual(len(profile), 5)
        self.assertAlmostEqual(profile["w"].iloc[0], 0.0)
        tip = 1e-3 * basis.tip_values()[0]
        self.assertAlmostEqual(profile["w"].iloc[-1], tip)


class TestRenderFigures(unittest.TestCase):
    """Tests for the figure rendering script."""

    def setUp(self):
        self.out_dir = tempfile.mkdtemp()
        script = Path(__file__).resolve().parent.parent / "scripts" / "render_figures.py"
        spec = importlib.util.spec_from_file_location("render_figures", script)
        self.render_figures = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(self.render_figures)

    def tearDown(self):
        shutil.rmtree(self.out_dir)

    def test_render_report(self):
        """Test one PNG per non-empty report file."""
        emit_report([_result(), _result("joint_pd")], self.out_dir)
        figures = os.path.join(self.out_dir, "figures")
        self.assertEqual(self.render_figures.main([self.out_dir, "-o", figures, "--dpi", "40"]), 0)
        rendered = sorted(os.listdir(figures))
        self.assertEqual(len(rendered), len(SCHEMAS) - 1)
        self.assertNotIn("deformation_profile.png", rendered)
        self.assertIn("tracking.png", rendered)


if __name__ == "__main__":
    unittest.main()
