"""Physical parameters of the 3-RRR mechanism and their configuration loader."""

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from flexpm.errors import ConfigError, ValidationError

BRANCH_ANGLES = (0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0)

_LENGTH_SCALE = {"m": 1.0, "mm": 1e-3}
_INERTIA_SCALE = {"kg*m^2": 1.0, "kg*mm^2": 1e-6}

_REQUIRED_KEYS = {
    "base": ("R",),
    "platform": ("r", "m_e", "J_e"),
    "links": ("l1", "l2", "width", "thickness", "rho", "E"),
}


@dataclass(frozen=True)
class MechanismParams:
    """Geometry, inertia and material constants of the mechanism, in SI units.

    Attributes:
        R: Radius of the base circle carrying the actuated joints A_i (m).
        r: Radius of the platform circle carrying the joints C_i (m).
        l1: Length of the flexible actuation links (m).
        l2: Length of the rigid intermediate links (m).
        rho: Mass per unit length of the actuation links (kg/m).
        E: Young's modulus of the actuation links (Pa).
        I: In-plane area moment of inertia of the actuation links (m^4).
        link_width: Section width of the actuation links (m).
        link_thickness: Section thickness of the actuation links (m).
        m_r: Mass of an intermediate link (kg).
        J_r: Rotational inertia of an intermediate link about its centre of mass (kg m^2).
        l_c: Distance from joint B_i to the intermediate-link centre of mass (m).
        m_e: Platform mass (kg).
        J_e: Platform rotational inertia (kg m^2).
        alpha: Branch angles, always (0, 2pi/3, 4pi/3).
    """

    R: float
    r: float
    l1: float
    l2: float
    rho: float
    E: float
    I: float
    link_width: float
    link_thickness: float
    m_r: float
    J_r: float
    l_c: float
    m_e: float
    J_e: float
    alpha: Tuple[float, float, float] = field(default=BRANCH_ANGLES)

    def __post_init__(self):
        self.validate()

    @property
    def EI(self) -> float:
        """Flexural rigidity of the actuation links (N m^2)."""
        return self.E * self.I

    def validate(self):
        """Check the physical invariants.

        Raises:
            ValidationError: With the first failed predicate as detail.
        """
        checks = [
            (self.R > self.r > 0, "R > r > 0"),
            (self.l1 > 0 and self.l2 > 0, "l1, l2 > 0"),
            (self.rho > 0 and self.E > 0 and self.I > 0, "rho, E, I > 0"),
            (self.m_r > 0 and self.J_r > 0, "m_r, J_r > 0"),
            (self.m_e > 0 and self.J_e > 0, "m_e, J_e > 0"),
            (0.0 <= self.l_c <= self.l2, "0 <= l_c <= l2"),
            (tuple(self.alpha) == BRANCH_ANGLES, "alpha == (0, 2pi/3, 4pi/3)"),
        ]
        for ok, predicate in checks:
            if not ok:
                raise ValidationError("InvalidParams", "Mechanism parameters violate an invariant", predicate)

    def base_joint_positions(self) -> np.ndarray:
        """Positions of the actuated joints A_i as a (3, 2) array."""
        angles = np.asarray(self.alpha)
        return self.R * np.column_stack((np.cos(angles), np.sin(angles)))

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "MechanismParams":
        """Create parameters from a flat dictionary of SI values.

        Parameters:
            config_dict: Dictionary keyed by field name. Unknown keys are ignored.

        Returns:
            MechanismParams: Parameter object.
        """
        valid_fields = {k: v for k, v in config_dict.items() if k in cls.__dataclass_fields__}
        if "alpha" in valid_fields:
            valid_fields["alpha"] = tuple(valid_fields["alpha"])
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, Any]:
        """Convert parameters to a flat dictionary of SI values.

        Returns:
            dict: Dictionary representation of the parameters.
        """
        result = {k: v for k, v in self.__dict__.items() if not k.startswith("_")}
        result["alpha"] = list(self.alpha)
        return result


def _section_value(config: Dict[str, Any], section: str, key: str) -> float:
    try:
        return float(config[section][key])
    except KeyError as ex:
        raise ConfigError("MissingKey", "Required mechanism key is missing", f"{section}.{key}") from ex
    except (TypeError, ValueError) as ex:
        raise ConfigError("BadValue", "Mechanism value is not a number", f"{section}.{key}") from ex


def _unit_scale(units: Dict[str, str], name: str, table: Dict[str, float], default: str) -> float:
    unit = units.get(name, default)
    if unit not in table:
        raise ConfigError("BadUnit", f"Unsupported {name} unit '{unit}'", f"supported: {', '.join(table)}")
    return table[unit]


def load_params(config: Union[Dict[str, Any], str, Path, None] = None) -> MechanismParams:
    """Load mechanism parameters from a structured configuration document.

    The document has a ``units`` block and the sections ``base``, ``platform``, ``links`` and
    optionally ``intermediate``. Lengths are converted to meters and inertias to kg m^2.
    Quantities not given explicitly are derived from uniform-beam formulas: ``I`` from the
    link section, ``m_r`` as ``rho * l2``, ``l_c`` as ``l2 / 2`` and ``J_r`` as ``m_r l2^2 / 12``.

    Parameters:
        config: A dictionary, a path to a JSON file, or None for the bundled reference table.

    Returns:
        MechanismParams: SI parameters satisfying all invariants.

    Raises:
        ConfigError: If a required key is missing or a unit is unsupported.
        ValidationError: If the resulting parameters violate an invariant.
    """
    if config is None:
        config = json.loads(resources.files("flexpm.resources").joinpath("reference_mechanism.json").read_text(encoding="utf-8"))
    elif isinstance(config, (str, Path)):
        path = Path(config)
        if not path.exists():
            raise ConfigError("MissingFile", "Mechanism configuration file does not exist", str(path))
        config = json.loads(path.read_text(encoding="utf-8"))

    for section, keys in _REQUIRED_KEYS.items():
        for key in keys:
            _section_value(config, section, key)

    units = config.get("units", {})
    length = _unit_scale(units, "length", _LENGTH_SCALE, "m")
    inertia = _unit_scale(units, "inertia", _INERTIA_SCALE, "kg*m^2")

    links = config["links"]
    l2 = _section_value(config, "links", "l2") * length
    width = _section_value(config, "links", "width") * length
    thickness = _section_value(config, "links", "thickness") * length
    rho = _section_value(config, "links", "rho")
    if "I" in links:
        # Explicit moment of inertia is given in length^4 units.
        area_moment = float(links["I"]) * length**4
    else:
        area_moment = width * thickness**3 / 12.0

    intermediate: Dict[str, Any] = config.get("intermediate", {}) or {}
    m_r = float(intermediate["m_r"]) if "m_r" in intermediate else rho * l2
    l_c = float(intermediate["l_c"]) * length if "l_c" in intermediate else 0.5 * l2
    J_r = float(intermediate["J_r"]) * inertia if "J_r" in intermediate else m_r * l2**2 / 12.0

    return MechanismParams(
        R=_section_value(config, "base", "R") * length,
        r=_section_value(config, "platform", "r") * length,
        l1=_section_value(config, "links", "l1") * length,
        l2=l2,
        rho=rho,
        E=_section_value(config, "links", "E"),
        I=area_moment,
        link_width=width,
        link_thickness=thickness,
        m_r=m_r,
        J_r=J_r,
        l_c=l_c,
        m_e=_section_value(config, "platform", "m_e"),
        J_e=_section_value(config, "platform", "J_e") * inertia,
    )


@dataclass(frozen=True)
class PlatformPose:
    """Pose of the moving platform.

    Attributes:
        x: Position along the base x axis (m).
        y: Position along the base y axis (m).
        theta: Rotation about the plane normal (rad).
    """

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    @classmethod
    def from_array(cls, values) -> "PlatformPose":
        x, y, theta = (float(v) for v in values)
        return cls(x, y, theta)


def reference_params(overrides: Optional[Dict[str, Any]] = None) -> MechanismParams:
    """Return the bundled reference parameters, optionally overriding SI fields.

    Parameters:
        overrides: Flat dictionary of SI field values to replace.

    Returns:
        MechanismParams: Parameter object.
    """
    params = load_params(None)
    if not overrides:
        return params
    values = params.to_dict()
    values.update(overrides)
    return MechanismParams.from_dict(values)
