"""Master configuration of a flexpm run."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from flexpm.control.control_config import ControlLawConfig
from flexpm.core.kinematics import KinematicsConfig
from flexpm.core.mechanism_config import MechanismParams, load_params
from flexpm.dynamics.plant import PlantConfig
from flexpm.errors import ConfigError
from flexpm.harness.trajectory import TrajectorySpec
from flexpm.identification.snapshots import IdentificationConfig
from flexpm.observer.network import ObserverConfig


def _baseline_default() -> ControlLawConfig:
    return ControlLawConfig(kind="joint_pd", kp=200.0, kd=0.2, compensation_model="rigid")


@dataclass
class HarnessConfig:
    """Settings of the case-study runs and of the report.

    Attributes:
        settle_offset: Delay from the start of each dwell to the start of its metric window (s).
        profile_window: ``[start, end]`` of the whole-link deflection profile in the report (s).
        profile_points: Abscissae per profile.
        profile_stride: Log rows between profiles.
        sweep_rates: Observer rates of the sweep (Hz).
        workers: Processes for independent episodes.
        observer_model: Path of the trained observer, or None to train one on the fly.
        strict: Raise on failed acceptance checks.
        simulate_duration: Length of the open-loop ``simulate`` run (s).
        simulate_torque: Constant joint torques of the ``simulate`` run (N m).
        simulate_tip_deflection: Initial tip deflection of every link in the ``simulate`` run (m).
    """

    settle_offset: float = 0.5
    profile_window: List[float] = field(default_factory=lambda: [4.0, 5.0])
    profile_points: int = 21
    profile_stride: int = 10
    sweep_rates: List[float] = field(default_factory=lambda: [1000.0, 500.0, 200.0, 100.0, 50.0])
    workers: int = 1
    observer_model: Optional[str] = None
    strict: bool = True
    simulate_duration: float = 1.0
    simulate_torque: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
    simulate_tip_deflection: float = 0.0

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "HarnessConfig":
        valid_fields = {k: v for k, v in config_dict.items() if k in cls.__dataclass_fields__}
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if not k.startswith("_")}


_SECTIONS = {
    "plant": PlantConfig,
    "control": ControlLawConfig,
    "baseline": ControlLawConfig,
    "observer": ObserverConfig,
    "trajectory": TrajectorySpec,
    "identification": IdentificationConfig,
    "kinematics": KinematicsConfig,
    "harness": HarnessConfig,
}


@dataclass
class SimulationConfig:
    """Master configuration for all flexpm subcommands.

    Attributes:
        mechanism: Path of a mechanism JSON file, an inline mechanism document, or None for
            the bundled reference table.
        plant: Truth plant settings.
        control: Proposed controller settings.
        baseline: Joint PD baseline settings.
        observer: Observer architecture, training and sampling settings.
        trajectory: Positioning task.
        identification: Mode-shape identification settings.
        kinematics: Inverse-kinematics settings.
        harness: Case-study and report settings.
    """

    mechanism: Optional[Union[str, Dict[str, Any]]] = None
    plant: PlantConfig = field(default_factory=PlantConfig)
    control: ControlLawConfig = field(default_factory=ControlLawConfig)
    baseline: ControlLawConfig = field(default_factory=_baseline_default)
    observer: ObserverConfig = field(default_factory=ObserverConfig)
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    identification: IdentificationConfig = field(default_factory=IdentificationConfig)
    kinematics: KinematicsConfig = field(default_factory=KinematicsConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "SimulationConfig":
        """Create configuration from dictionary.

        Nested dictionaries are converted to their section classes; missing sections keep
        their defaults. The baseline section is applied on top of the joint PD defaults.

        Parameters:
            config_dict: Dictionary with configuration sections.

        Returns:
            SimulationConfig: Configuration object.
        """
        config = config_dict.copy()
        for name, section in _SECTIONS.items():
            if isinstance(config.get(name), dict):
                if name == "baseline":
                    config[name] = ControlLawConfig.from_dict({**_baseline_default().to_dict(), **config[name]})
                else:
                    config[name] = section.from_dict(config[name])
        valid_fields = {k: v for k, v in config.items() if k in cls.__dataclass_fields__}
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, Any]:
        result = {}
        for key, value in self.__dict__.items():
            if key.startswith("_"):
                continue
            if hasattr(value, "to_dict"):
                result[key] = value.to_dict()
            else:
                result[key] = value
        return result

    @classmethod
    def load(cls, path: Union[str, Path, None]) -> "SimulationConfig":
        """Read a JSON configuration file; None gives the defaults.

        A relative mechanism path is resolved against the configuration file's directory.

        Raises:
            ConfigError: If the file is missing or not valid JSON.
        """
        if path is None:
            return cls()
        path = Path(path)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as ex:
            raise ConfigError("MissingFile", "Configuration file does not exist", str(path)) from ex
        except json.JSONDecodeError as ex:
            raise ConfigError("BadJson", "Configuration file is not valid JSON", f"{path}: {ex}") from ex
        if not isinstance(payload, dict):
            raise ConfigError("BadJson", "Configuration file must hold an object", str(path))
        mechanism = payload.get("mechanism")
        if isinstance(mechanism, str) and not Path(mechanism).is_absolute():
            payload["mechanism"] = str(path.parent / mechanism)
        return cls.from_dict(payload)

    def params(self) -> MechanismParams:
        """Mechanism parameters named by the ``mechanism`` entry."""
        return load_params(self.mechanism)
