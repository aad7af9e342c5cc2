"""Kinetic and potential energy evaluated directly from the deformation field."""

from dataclasses import dataclass

import numpy as np

from flexpm.core.geometry import perp, unit
from flexpm.core.kinematics import DEFAULT_KINEMATICS, KinematicsConfig, inverse_kinematics, passive_rates
from flexpm.core.mechanism_config import MechanismParams
from flexpm.core.modal_basis import ModalBasis, beam_integrals, gauss_legendre
from flexpm.core.state import GeneralizedState
from flexpm.dynamics.eom import link_stiffness


@dataclass(frozen=True, eq=False)
class KineticEnergy:
    """Kinetic energy split by body (J).

    Attributes:
        flexible: Per actuation link.
        intermediate: Per intermediate link.
        platform: Moving platform.
    """

    flexible: np.ndarray
    intermediate: np.ndarray
    platform: float

    @property
    def total(self) -> float:
        return float(self.flexible.sum() + self.intermediate.sum() + self.platform)


def kinetic_energy(
    params: MechanismParams, basis: ModalBasis, state: GeneralizedState, kinematics: KinematicsConfig = DEFAULT_KINEMATICS
) -> KineticEnergy:
    """Kinetic energy of every body at a state.

    Actuation links integrate ``rho |r_dot|^2 / 2`` over Gauss nodes, intermediate links use the
    centre-of-mass velocity and the absolute angular velocity from the velocity projection, and the
    platform uses its pose rate.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis.
        state: Generalized state with rates.
        kinematics: Kinematics settings.

    Returns:
        KineticEnergy: Energy partition.
    """
    ik = inverse_kinematics(params, basis, state.pose, state.q_f, kinematics)
    q_a_dot, omega = passive_rates(params, basis, state, config=kinematics)
    flexible = np.zeros(3)
    intermediate = np.zeros(3)
    integrals = beam_integrals(basis) if basis.n else None
    nodes, weights = _nodes(basis, integrals)
    for i in range(3):
        modes, rates = state.link_modes(i), state.link_mode_rates(i)
        if integrals is not None:
            deflection = integrals.phi @ modes
            deflection_rate = integrals.phi @ rates
            w_tip, w_rate = float(integrals.tip @ modes), float(integrals.tip @ rates)
        else:
            deflection = deflection_rate = np.zeros_like(nodes)
            w_tip = w_rate = 0.0
        # Components along v and u of the velocity of each material point.
        along_v = nodes * q_a_dot[i] + deflection_rate
        along_u = -deflection * q_a_dot[i]
        flexible[i] = 0.5 * params.rho * float(weights @ (along_v**2 + along_u**2))

        angle = params.alpha[i] + ik.q_a[i]
        u = unit(angle)
        v = perp(u)
        w_perp = perp(unit(angle + ik.beta1[i] + ik.q_p[i]))
        com_velocity = (params.l1 * q_a_dot[i] + w_rate) * v - w_tip * q_a_dot[i] * u + params.l_c * omega[i] * w_perp
        intermediate[i] = 0.5 * params.m_r * float(com_velocity @ com_velocity) + 0.5 * params.J_r * omega[i] ** 2
    x_dot, y_dot, theta_dot = state.q_e_dot
    platform = 0.5 * params.m_e * (x_dot**2 + y_dot**2) + 0.5 * params.J_e * theta_dot**2
    return KineticEnergy(flexible=flexible, intermediate=intermediate, platform=float(platform))


def _nodes(basis, integrals):
    if integrals is not None:
        return integrals.nodes, integrals.weights
    return gauss_legendre(basis.length)


def potential_energy(params: MechanismParams, basis: ModalBasis, q_f) -> float:
    """Elastic strain energy ``sum_i q_fi^T K_link q_fi / 2`` of the actuation links (J).

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis.
        q_f: Modal coordinates (3n).

    Returns:
        float: Non-negative energy.
    """
    n = basis.n
    if n == 0:
        return 0.0
    modes = np.asarray(q_f, dtype=float).reshape(3, n)
    K = link_stiffness(params, basis)
    return float(0.5 * np.einsum("ij,jk,ik->", modes, K, modes))
