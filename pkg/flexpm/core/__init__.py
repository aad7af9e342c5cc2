"""Mechanism description, modal basis and kinematics."""

from .mechanism_config import BRANCH_ANGLES, MechanismParams, PlatformPose, load_params, reference_params
from .modal_basis import BoundaryCondition, ModalBasis, beam_integrals, deformation_profile, natural_frequencies
from .state import GeneralizedState
from .kinematics import (
    AssemblyMode,
    KinematicsConfig,
    compute_jacobians,
    forward_position,
    inverse_kinematics,
    passive_rates,
)

__all__ = [
    "BRANCH_ANGLES",
    "MechanismParams",
    "PlatformPose",
    "load_params",
    "reference_params",
    "BoundaryCondition",
    "ModalBasis",
    "beam_integrals",
    "deformation_profile",
    "natural_frequencies",
    "GeneralizedState",
    "AssemblyMode",
    "KinematicsConfig",
    "compute_jacobians",
    "forward_position",
    "inverse_kinematics",
    "passive_rates",
]
