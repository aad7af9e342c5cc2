"""Equations of motion and the truth plant."""

from .eom import EomMatrices, assemble_eom, generalized_force_map
from .energy import KineticEnergy, kinetic_energy, potential_energy
from .plant import (
    Plant,
    PlantConfig,
    PlantState,
    VirtualFixture,
    clamped_platform_frequencies,
    flexible_link_ring_down,
    forward_dynamics_step,
    plant_ring_down,
)

__all__ = [
    "EomMatrices",
    "assemble_eom",
    "generalized_force_map",
    "KineticEnergy",
    "kinetic_energy",
    "potential_energy",
    "Plant",
    "PlantConfig",
    "PlantState",
    "VirtualFixture",
    "clamped_platform_frequencies",
    "flexible_link_ring_down",
    "forward_dynamics_step",
    "plant_ring_down",
]
