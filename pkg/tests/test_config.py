"""Tests for the master configuration."""

import json
import os
import shutil
import tempfile
import unittest
from importlib import resources

from flexpm.config import HarnessConfig, SimulationConfig
from flexpm.control.control_config import ControlLawConfig
from flexpm.core.mechanism_config import reference_params
from flexpm.dynamics.plant import PlantConfig
from flexpm.errors import ConfigError


class TestSimulationConfig(unittest.TestCase):
    """Tests for SimulationConfig."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def _write(self, name, text):
        path = os.path.join(self.temp_dir, name)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        return path

    def test_defaults(self):
        """Test the default sections."""
        config = SimulationConfig()
        self.assertIsNone(config.mechanism)
        self.assertEqual(config.control.kind, "computed_torque")
        self.assertEqual(config.baseline.kind, "joint_pd")
        self.assertEqual(config.baseline.kd, 0.2)
        self.assertEqual(config.baseline.compensation_model, "rigid")
        self.assertEqual(config.harness.settle_offset, 0.5)
        self.assertIsInstance(SimulationConfig.load(None), SimulationConfig)

    def test_from_dict(self):
        """Test sections are converted and unknown keys ignored."""
        config = SimulationConfig.from_dict(
            {"plant": {"n_modes": 2, "colour": "red"}, "control": {"kp": 300.0}, "harness": {"workers": 4}, "extra": 1}
        )
        self.assertIsInstance(config.plant, PlantConfig)
        self.assertEqual(config.plant.n_modes, 2)
        self.assertEqual(config.control.kp, 300.0)
        self.assertEqual(config.control.kind, "computed_torque")
        self.assertIsInstance(config.harness, HarnessConfig)
        self.assertEqual(config.harness.workers, 4)

    def test_baseline_merge(self):
        """Test a partial baseline section keeps the joint PD defaults."""
        config = SimulationConfig.from_dict({"baseline": {"kp": 50.0}})
        self.assertIsInstance(config.baseline, ControlLawConfig)
        self.assertEqual(config.baseline.kind, "joint_pd")
        self.assertEqual(config.baseline.kp, 50.0)
        self.assertEqual(config.baseline.kd, 0.2)

    def test_to_dict(self):
        """Test nested sections serialize to dictionaries."""
        values = SimulationConfig().to_dict()
        self.assertEqual(values["plant"]["n_modes"], 5)
        self.assertEqual(values["trajectory"]["move_time"], 1.0)
        self.assertEqual(SimulationConfig.from_dict(values).control.kd, 1.0)

    def test_load_errors(self):
        """Test missing and malformed files are configuration errors."""
        with self.assertRaises(ConfigError) as context:
            SimulationConfig.load(os.path.join(self.temp_dir, "missing.json"))
        self.assertEqual(context.exception.code, "MissingFile")
        with self.assertRaises(ConfigError) as context:
            SimulationConfig.load(self._write("bad.json", "{not json"))
        self.assertEqual(context.exception.code, "BadJson")
        with self.assertRaises(ConfigError) as context:
            SimulationConfig.load(self._write("list.json", "[1, 2]"))
        self.assertEqual(context.exception.code, "BadJson")

    def test_relative_mechanism(self):
        """Test a relative mechanism path resolves against the configuration file."""
        table = resources.files("flexpm.resources").joinpath("reference_mechanism.json").read_text(encoding="utf-8")
        self._write("mechanism.json", table)
        path = self._write("case.json", json.dumps({"mechanism": "mechanism.json", "plant": {"n_modes": 1}}))
        config = SimulationConfig.load(path)
        self.assertEqual(config.mechanism, os.path.join(self.temp_dir, "mechanism.json"))
        self.assertEqual(config.plant.n_modes, 1)
        self.assertEqual(config.params(), reference_params())


if __name__ == "__main__":
    unittest.main()
