"""Equations of motion of the rigid-flexible mechanism.

The open-chain model lives in joint space ``q_w = [q_a, q_p, q_f]``. Each branch contributes a
mass block that depends only on its own passive angle and modal coordinates, so the Christoffel
terms are built branch by branch. The reduced model in ``q`` follows from the congruence
``M_hat = S^T M_w S + M_platform`` and ``C_hat = S^T M_w S_dot + S^T C_w S``.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from flexpm.core.kinematics import DEFAULT_KINEMATICS, Jacobians, KinematicsConfig, compute_jacobians
from flexpm.core.mechanism_config import MechanismParams
from flexpm.core.modal_basis import ModalBasis, beam_integrals
from flexpm.core.state import GeneralizedState
from flexpm.errors import IntegrityError, ValidationError

CORIOLIS_METHODS = ("analytic", "finite_difference")


@dataclass(frozen=True, eq=False)
class EomMatrices:
    """Reduced equations of motion ``M_hat q_ddot + (C_hat + D_hat) q_dot + K_hat q = J^T tau``.

    Attributes:
        M_hat: Mass matrix, (3+3n) square.
        C_hat: Coriolis and centrifugal matrix.
        K_hat: Stiffness matrix; only the modal block is nonzero.
        D_hat: Modal damping matrix; zero unless a damping ratio is configured.
        jacobians: Jacobians of the state the matrices were assembled at.
        M_w: Joint-space mass matrix, (6+3n) square.
        C_w: Joint-space Coriolis matrix.
        factor: Cholesky factor of M_hat as returned by ``scipy.linalg.cho_factor``.
    """

    M_hat: np.ndarray
    C_hat: np.ndarray
    K_hat: np.ndarray
    D_hat: np.ndarray
    jacobians: Jacobians
    M_w: np.ndarray
    C_w: np.ndarray
    factor: Tuple[np.ndarray, bool]

    @property
    def n(self) -> int:
        return (self.M_hat.shape[0] - 3) // 3

    @property
    def M_rr(self) -> np.ndarray:
        return self.M_hat[:3, :3]

    @property
    def M_rf(self) -> np.ndarray:
        return self.M_hat[:3, 3:]

    @property
    def M_ff(self) -> np.ndarray:
        return self.M_hat[3:, 3:]

    @property
    def C_rr(self) -> np.ndarray:
        return self.C_hat[:3, :3]

    @property
    def C_rf(self) -> np.ndarray:
        return self.C_hat[:3, 3:]

    @property
    def C_fr(self) -> np.ndarray:
        return self.C_hat[3:, :3]

    @property
    def C_ff(self) -> np.ndarray:
        return self.C_hat[3:, 3:]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``M_hat x = rhs`` with the stored factorization."""
        return linalg.cho_solve(self.factor, rhs)


def branch_indices(branch: int, n: int) -> np.ndarray:
    """Positions of ``(q_a_i, q_p_i, q_f_i)`` inside ``q_w`` for a 0-based branch."""
    return np.r_[branch, 3 + branch, 6 + branch * n : 6 + (branch + 1) * n]


def _intermediate_velocity_map(params: MechanismParams, basis: ModalBasis, q_p_i: float, q_f_i: np.ndarray):
    """Centre-of-mass velocity map G (2 x (2+n)) of an intermediate link in the link-1 frame.

    Also returns dG/d(delta), dG/d(w_tip) and the angular-velocity row h, where
    ``delta = beta1 + q_p`` and ``w_tip`` is the tip deflection.
    """
    n = basis.n
    if n:
        integrals = beam_integrals(basis)
        tip, slope = integrals.tip, integrals.tip_slope
    else:
        tip, slope = np.zeros(0), np.zeros(0)
    w_tip = float(tip @ q_f_i) if n else 0.0
    delta = (float(slope @ q_f_i) if n else 0.0) + q_p_i
    s, c = math.sin(delta), math.cos(delta)
    l_c = params.l_c
    G = np.zeros((2, 2 + n))
    G[:, 0] = (-w_tip - l_c * s, params.l1 + l_c * c)
    G[:, 1] = (-l_c * s, l_c * c)
    G[0, 2:] = -l_c * s * slope
    G[1, 2:] = tip + l_c * c * slope
    dG_delta = np.zeros((2, 2 + n))
    dG_delta[:, 0] = (-l_c * c, -l_c * s)
    dG_delta[:, 1] = (-l_c * c, -l_c * s)
    dG_delta[0, 2:] = -l_c * c * slope
    dG_delta[1, 2:] = -l_c * s * slope
    dG_w = np.zeros((2, 2 + n))
    dG_w[0, 0] = -1.0
    h = np.concatenate(([1.0, 1.0], slope))
    return G, dG_delta, dG_w, h, tip, slope


def branch_mass_matrix(params: MechanismParams, basis: ModalBasis, q_p_i: float, q_f_i) -> np.ndarray:
    """Mass matrix of one branch in its local coordinates ``(q_a_i, q_p_i, q_f_i)``.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis of the actuation link.
        q_p_i: Passive joint angle (rad).
        q_f_i: Modal coordinates of the link (n).

    Returns:
        numpy.ndarray: Symmetric (2+n) square matrix.
    """
    return _branch_mass(params, basis, q_p_i, np.asarray(q_f_i, dtype=float), derivatives=False)[0]


def _branch_mass(params, basis, q_p_i, q_f_i, derivatives=True):
    n = basis.n
    M = np.zeros((2 + n, 2 + n))
    M[0, 0] = params.rho * params.l1**3 / 3.0
    if n:
        integrals = beam_integrals(basis)
        mass_q = integrals.mass @ q_f_i
        M[0, 0] += params.rho * float(q_f_i @ mass_q)
        M[0, 2:] = M[2:, 0] = params.rho * integrals.first_moment
        M[2:, 2:] = params.rho * integrals.mass
    G, dG_delta, dG_w, h, tip, slope = _intermediate_velocity_map(params, basis, q_p_i, q_f_i)
    M += params.m_r * G.T @ G + params.J_r * np.outer(h, h)
    if not derivatives:
        return M, None
    dM = np.zeros((2 + n, 2 + n, 2 + n))
    # q_a does not enter the mass matrix, so dM[0] stays zero.
    gram = G.T @ dG_delta
    dM[1] = params.m_r * (gram + gram.T)
    for k in range(n):
        dG = slope[k] * dG_delta + tip[k] * dG_w
        gram = G.T @ dG
        dM[2 + k] = params.m_r * (gram + gram.T)
        dM[2 + k, 0, 0] += 2.0 * params.rho * mass_q[k]
    return M, dM


def _branch_mass_derivatives_fd(params, basis, q_p_i, q_f_i):
    n = basis.n
    z = np.concatenate(([0.0, q_p_i], q_f_i))
    dM = np.zeros((2 + n, 2 + n, 2 + n))
    for k in range(1, 2 + n):
        step = 1e-6 * (1.0 + abs(z[k]))
        plus, minus = z.copy(), z.copy()
        plus[k] += step
        minus[k] -= step
        dM[k] = (
            _branch_mass(params, basis, plus[1], plus[2:], derivatives=False)[0]
            - _branch_mass(params, basis, minus[1], minus[2:], derivatives=False)[0]
        ) / (2.0 * step)
    return dM


def christoffel_matrix(dM: np.ndarray, z_dot: np.ndarray) -> np.ndarray:
    """Coriolis matrix from mass-matrix partials, ``C_kj = sum_i Gamma_kji z_dot_i``.

    Parameters:
        dM: Array with ``dM[i] = dM/dz_i``.
        z_dot: Coordinate rates.

    Returns:
        numpy.ndarray: Matrix C with ``dM/dt - 2C`` skew-symmetric.
    """
    z_dot = np.asarray(z_dot, dtype=float)
    first = np.tensordot(z_dot, dM, axes=1)
    second = (dM @ z_dot).T
    third = np.tensordot(dM, z_dot, axes=([1], [0]))
    return 0.5 * (first + second - third)


def joint_space_matrices(params, basis, q_p, q_f, q_w_dot, method: str = "analytic") -> Tuple[np.ndarray, np.ndarray]:
    """Joint-space mass and Coriolis matrices ``(M_w, C_w)``.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis.
        q_p: Passive joint angles (3).
        q_f: Modal coordinates (3n).
        q_w_dot: Joint-space rates (6+3n).
        method: ``"analytic"`` or ``"finite_difference"`` mass-matrix partials.

    Returns:
        tuple: ``(M_w, C_w)``.
    """
    if method not in CORIOLIS_METHODS:
        raise ValidationError("BadMethod", f"Unknown Coriolis method '{method}'")
    n = basis.n
    size = 6 + 3 * n
    M_w = np.zeros((size, size))
    C_w = np.zeros((size, size))
    modes = np.asarray(q_f, dtype=float).reshape(3, n)
    for i in range(3):
        index = branch_indices(i, n)
        M, dM = _branch_mass(params, basis, float(q_p[i]), modes[i], derivatives=method == "analytic")
        if method == "finite_difference":
            dM = _branch_mass_derivatives_fd(params, basis, float(q_p[i]), modes[i])
        block = np.ix_(index, index)
        M_w[block] = M
        C_w[block] = christoffel_matrix(dM, q_w_dot[index])
    return M_w, C_w


def joint_mass_matrix(params: MechanismParams, basis: ModalBasis, q_p, q_f) -> np.ndarray:
    """Joint-space mass matrix M_w at passive angles ``q_p`` and modal coordinates ``q_f``."""
    n = basis.n
    M_w = np.zeros((6 + 3 * n, 6 + 3 * n))
    modes = np.asarray(q_f, dtype=float).reshape(3, n)
    for i in range(3):
        index = branch_indices(i, n)
        M_w[np.ix_(index, index)] = branch_mass_matrix(params, basis, float(q_p[i]), modes[i])
    return M_w


def platform_mass_matrix(params: MechanismParams, n: int) -> np.ndarray:
    """Constant platform inertia embedded in the (3+3n) square reduced space."""
    M = np.zeros((3 + 3 * n, 3 + 3 * n))
    M[0, 0] = M[1, 1] = params.m_e
    M[2, 2] = params.J_e
    return M


def link_stiffness(params: MechanismParams, basis: ModalBasis) -> np.ndarray:
    """Stiffness of one actuation link, ``EI int phi_j'' phi_k''``."""
    if basis.n == 0:
        return np.zeros((0, 0))
    return params.EI * beam_integrals(basis).curvature


def link_mass(params: MechanismParams, basis: ModalBasis) -> np.ndarray:
    """Modal mass of one clamped actuation link, ``rho int phi_j phi_k``."""
    if basis.n == 0:
        return np.zeros((0, 0))
    return params.rho * beam_integrals(basis).mass


def stiffness_matrix(params: MechanismParams, basis: ModalBasis) -> np.ndarray:
    """Reduced stiffness K_hat: zero rigid block, block-diagonal modal block."""
    n = basis.n
    K = np.zeros((3 + 3 * n, 3 + 3 * n))
    if n:
        K[3:, 3:] = linalg.block_diag(*[link_stiffness(params, basis)] * 3)
    return K


def modal_damping_matrix(params: MechanismParams, basis: ModalBasis, damping_ratio: float) -> np.ndarray:
    """Reduced damping D_hat with ratio ``damping_ratio`` on every clamped link mode.

    Each link uses ``D = M V diag(2 zeta omega) V^T M`` from the generalized eigenproblem
    ``K V = M V diag(omega^2)`` with mass-normalized ``V``.
    """
    n = basis.n
    D = np.zeros((3 + 3 * n, 3 + 3 * n))
    if n == 0 or damping_ratio == 0.0:
        return D
    if damping_ratio < 0.0:
        raise ValidationError("BadDamping", "Damping ratio must be non-negative", f"zeta={damping_ratio}")
    M = link_mass(params, basis)
    eigenvalues, vectors = linalg.eigh(link_stiffness(params, basis), M)
    omega = np.sqrt(np.clip(eigenvalues, 0.0, None))
    block = M @ vectors @ np.diag(2.0 * damping_ratio * omega) @ vectors.T @ M
    D[3:, 3:] = linalg.block_diag(block, block, block)
    return D


def constant_matrices(params: MechanismParams, basis: ModalBasis, damping_ratio: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """State-independent ``(K_hat, D_hat)``."""
    return stiffness_matrix(params, basis), modal_damping_matrix(params, basis, damping_ratio)


def assemble_eom(
    params: MechanismParams,
    basis: ModalBasis,
    state: GeneralizedState,
    kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
    damping_ratio: float = 0.0,
    coriolis_method: str = "analytic",
    jacobians: Optional[Jacobians] = None,
    constants: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> EomMatrices:
    """Assemble the reduced equations of motion at a state.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis.
        state: Generalized state.
        kinematics: Kinematics settings.
        damping_ratio: Modal damping ratio (0 for the conservative model).
        coriolis_method: How mass-matrix partials are formed.
        jacobians: Precomputed Jacobians including S_dot, or None.
        constants: Precomputed ``(K_hat, D_hat)`` for this basis and damping ratio, or None.

    Returns:
        EomMatrices: The hatted matrices and their ingredients.

    Raises:
        SingularityError: At a singular configuration.
        IntegrityError: If M_hat is not positive definite.
    """
    if jacobians is None or jacobians.S_dot is None:
        jacobians = compute_jacobians(params, basis, state, kinematics, with_s_dot=True)
    S, S_dot = jacobians.S, jacobians.S_dot
    q_w_dot = S @ state.q_dot
    M_w, C_w = joint_space_matrices(params, basis, jacobians.ik.q_p, state.q_f, q_w_dot, coriolis_method)
    M_hat = S.T @ M_w @ S + platform_mass_matrix(params, basis.n)
    M_hat = 0.5 * (M_hat + M_hat.T)
    try:
        factor = linalg.cho_factor(M_hat)
    except linalg.LinAlgError as ex:
        raise IntegrityError("IndefiniteMass", "Reduced mass matrix is not positive definite") from ex
    C_hat = S.T @ M_w @ S_dot + S.T @ C_w @ S
    K_hat, D_hat = constants if constants is not None else constant_matrices(params, basis, damping_ratio)
    return EomMatrices(
        M_hat=M_hat,
        C_hat=C_hat,
        K_hat=K_hat,
        D_hat=D_hat,
        jacobians=jacobians,
        M_w=M_w,
        C_w=C_w,
        factor=factor,
    )


def reduced_mass_matrix(
    params: MechanismParams, basis: ModalBasis, state: GeneralizedState, kinematics: KinematicsConfig = DEFAULT_KINEMATICS
) -> np.ndarray:
    """M_hat alone, without Coriolis terms or S_dot."""
    jacobians = compute_jacobians(params, basis, state, kinematics)
    S = jacobians.S
    M_hat = S.T @ joint_mass_matrix(params, basis, jacobians.ik.q_p, state.q_f) @ S + platform_mass_matrix(params, basis.n)
    return 0.5 * (M_hat + M_hat.T)


def generalized_force_map(jacobians: Jacobians, tau_a, tau_f=None) -> Tuple[np.ndarray, np.ndarray]:
    """Generalized forces of actuator torques by virtual work.

    Parameters:
        jacobians: Jacobians at the current state.
        tau_a: Actuated joint torques (3).
        tau_f: Modal forces (3n), zeros if None.

    Returns:
        tuple: ``(Q, Q_w)`` with ``Q = J^T [tau_a; tau_f]`` and ``Q_w = [tau_a; 0; tau_f]``.
    """
    n = jacobians.n
    tau_a = np.asarray(tau_a, dtype=float).reshape(3)
    tau_f = np.zeros(3 * n) if tau_f is None else np.asarray(tau_f, dtype=float).reshape(3 * n)
    tau = np.concatenate((tau_a, tau_f))
    Q = jacobians.J.T @ tau
    Q_w = np.concatenate((tau_a, np.zeros(3), tau_f))
    return Q, Q_w
