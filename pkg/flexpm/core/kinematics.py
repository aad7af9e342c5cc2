"""Inverse kinematics and Jacobians of the 3-RRR mechanism with flexible actuation links.

Coordinate orderings used throughout:

* ``q = [x, y, theta, q_f]`` with ``q_f`` stored link by link (n modes per link);
* ``q_d = [q_a, q_f]`` (driven coordinates);
* ``q_w = [q_a, q_p, q_f]`` (joint-space coordinates of the open chains).
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Optional, Tuple

import numpy as np

from flexpm.core.geometry import perp, platform_corner_positions, platform_corner_velocities, unit
from flexpm.core.mechanism_config import MechanismParams, PlatformPose
from flexpm.core.modal_basis import ModalBasis, beam_integrals
from flexpm.core.state import GeneralizedState
from flexpm.errors import ConvergenceError, SingularityError, UnreachablePoseError, ValidationError

# Centre of the actuated-angle window of each branch (the arcsin case split).
_Q_A_CENTRES = (math.pi, math.pi / 3.0, 2.0 * math.pi / 3.0)
_DENOMINATOR_FLOOR = 1e-9
_DETERMINANT_FLOOR = 1e-12
_ANGLE_FLOOR = 1e-9


@dataclass(frozen=True)
class AssemblyMode:
    """Elbow orientation of each branch; +1 is the default working mode."""

    elbows: Tuple[int, int, int] = (1, 1, 1)

    def __post_init__(self):
        if len(self.elbows) != 3 or any(e not in (-1, 1) for e in self.elbows):
            raise ValidationError("BadAssemblyMode", "Elbow signs must be three values of +1 or -1", str(self.elbows))


@dataclass(frozen=True)
class KinematicsConfig:
    """Settings of the inverse-kinematics solver and of the Jacobian derivative.

    Attributes:
        assembly: Elbow orientation per branch.
        tolerance: Loop-closure tolerance of the solver (m).
        max_iterations: Iteration cap of the loop-closure refinement.
        fd_step: Step length in q-space for the directional derivative of S.
        s_dot_method: ``"analytic"`` or ``"finite_difference"``.
    """

    assembly: AssemblyMode = field(default_factory=AssemblyMode)
    tolerance: float = 1e-12
    max_iterations: int = 50
    fd_step: float = 1e-6
    s_dot_method: str = "analytic"

    def __post_init__(self):
        if self.s_dot_method not in ("analytic", "finite_difference"):
            raise ValidationError("BadMethod", f"Unknown S_dot method '{self.s_dot_method}'")

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "KinematicsConfig":
        config = config_dict.copy()
        if "assembly" in config and isinstance(config["assembly"], (list, tuple)):
            config["assembly"] = AssemblyMode(tuple(int(e) for e in config["assembly"]))
        valid_fields = {k: v for k, v in config.items() if k in cls.__dataclass_fields__}
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, Any]:
        result = {k: v for k, v in self.__dict__.items() if not k.startswith("_")}
        result["assembly"] = list(self.assembly.elbows)
        return result


DEFAULT_KINEMATICS = KinematicsConfig()


@dataclass(frozen=True, eq=False)
class IkSolution:
    """Joint angles and auxiliary angles of the three branches.

    Attributes:
        q_a: Actuated joint angles (rad).
        q_p: Passive joint angles at B_i (rad).
        beta1: Tip slope of each actuation link (rad).
        beta2: Angle between the undeformed link and the chord A_iB_i (rad).
        beta3: ``beta2 - beta1`` (rad).
        angle_abc: Interior angle A_iB_iC_i (rad).
        tip_deflection: Transverse tip deflection of each actuation link (m).
        iterations: Refinement iterations used (maximum over branches).
        residual: Final loop-closure residual (m).
    """

    q_a: np.ndarray
    q_p: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    beta3: np.ndarray
    angle_abc: np.ndarray
    tip_deflection: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True, eq=False)
class Jacobians:
    """Velocity maps ``q_d_dot = J q_dot`` and ``q_w_dot = S q_dot``.

    Attributes:
        J: (3+3n) x (3+3n) matrix ``[[J_ax, J_af], [0, I]]``.
        S: (6+3n) x (3+3n) matrix stacking ``dq_a/dq``, ``dq_p/dq`` and ``[0, I]``.
        S_dot: Time derivative of S along the current velocity, or None.
        ik: Inverse-kinematics solution at the state.
    """

    J: np.ndarray
    S: np.ndarray
    S_dot: Optional[np.ndarray]
    ik: IkSolution

    @cached_property
    def condition(self) -> float:
        """Condition number of J_ax."""
        return float(np.linalg.cond(self.J_ax))

    @property
    def n(self) -> int:
        return (self.J.shape[0] - 3) // 3

    @property
    def J_ax(self) -> np.ndarray:
        return self.J[:3, :3]

    @property
    def J_af(self) -> np.ndarray:
        return self.J[:3, 3:]


def _link_tip_data(basis: ModalBasis, q_f_i: np.ndarray) -> Tuple[float, float, np.ndarray, np.ndarray]:
    if basis.n == 0:
        empty = np.zeros(0)
        return 0.0, 0.0, empty, empty
    integrals = beam_integrals(basis)
    return float(integrals.tip @ q_f_i), float(integrals.tip_slope @ q_f_i), integrals.tip, integrals.tip_slope


def _split_modes(q_f, n: int) -> np.ndarray:
    q_f = np.asarray(q_f, dtype=float).reshape(-1)
    if q_f.size != 3 * n:
        raise ValidationError("DimensionMismatch", "Modal coordinate count does not match the basis", f"{q_f.size} != {3 * n}")
    return q_f.reshape(3, n)


def _closure_terms(params, i, q_a, q_p, w_tip, beta1):
    """Scalar form of :func:`_branch_closure`: ``(x, y, dx/dq_a, dy/dq_a, dx/dq_p, dy/dq_p)``."""
    alpha = params.alpha[i]
    angle = alpha + q_a
    c, s = math.cos(angle), math.sin(angle)
    psi = angle + beta1 + q_p
    cw, sw = math.cos(psi), math.sin(psi)
    l1, l2 = params.l1, params.l2
    x = params.R * math.cos(alpha) + l1 * c - w_tip * s + l2 * cw
    y = params.R * math.sin(alpha) + l1 * s + w_tip * c + l2 * sw
    return x, y, -l1 * s - w_tip * c - l2 * sw, l1 * c - w_tip * s + l2 * cw, -l2 * sw, l2 * cw


def _branch_closure(params, i, q_a, q_p, w_tip, beta1):
    """Chain end point of branch ``i`` and the partial derivatives w.r.t. (q_a, q_p)."""
    x, y, ax, ay, px, py = _closure_terms(params, i, q_a, q_p, w_tip, beta1)
    return np.array((x, y)), np.array((ax, ay)), np.array((px, py))


def _closed_form_branch(params, i, corner, w_tip, beta1, elbow):
    base = params.base_joint_positions()[i]
    a, b = corner - base
    ac = math.hypot(a, b)
    ab = math.hypot(params.l1, w_tip)
    if not abs(ab - params.l2) <= ac <= ab + params.l2:
        raise UnreachablePoseError(
            "OutsideEnvelope", f"Branch {i + 1} cannot reach its platform joint", f"|AC|={ac:.6g} m outside [{abs(ab - params.l2):.6g}, {ab + params.l2:.6g}]"
        )
    beta2 = math.atan(w_tip / params.l1)
    cos_abc = (ab**2 + params.l2**2 - ac**2) / (2.0 * ab * params.l2)
    angle_abc = math.acos(min(1.0, max(-1.0, cos_abc)))
    if not _ANGLE_FLOOR < angle_abc < math.pi - _ANGLE_FLOOR:
        raise SingularityError("FlatElbow", f"Branch {i + 1} is fully stretched or folded", f"angle ABC={angle_abc:.3e} rad")
    # Direction of B->C relative to the undeformed link, then the passive angle.
    gamma = beta2 + elbow * (math.pi - angle_abc)
    q_p = gamma - beta1
    c = params.l1 + params.l2 * math.cos(gamma)
    d = w_tip + params.l2 * math.sin(gamma)
    norm = c * c + d * d
    sin_phi = (b * c - a * d) / norm
    cos_phi = (a * c + b * d) / norm
    if abs(sin_phi) > 1.0 + 1e-12:
        raise UnreachablePoseError("ArcsinDomain", f"Branch {i + 1} has no actuated angle", f"arcsin argument {sin_phi:.6g}")
    phi = math.atan2(sin_phi, cos_phi)
    centre = _Q_A_CENTRES[i]
    q_a = centre + _wrap(phi - params.alpha[i] - centre)
    return q_a, q_p, beta2, angle_abc


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def inverse_kinematics(
    params: MechanismParams,
    basis: ModalBasis,
    pose: PlatformPose,
    q_f=None,
    config: KinematicsConfig = DEFAULT_KINEMATICS,
) -> IkSolution:
    """Solve the actuated and passive joint angles for a platform pose and link deformation.

    For fixed modal coordinates the tip deflection and tip slope of each link are known, so every
    branch reduces to a two-link chain with a bent first link. The chain is solved in closed form
    (law of cosines for the elbow, arcsin case split for the actuated angle) and then refined by
    Newton steps on the loop-closure equation until the corner error is below ``config.tolerance``.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis of the actuation links.
        pose: Platform pose.
        q_f: Modal coordinates (3n), zeros if None.
        config: Solver settings and assembly mode.

    Returns:
        IkSolution: The joint angles and auxiliary angles.

    Raises:
        UnreachablePoseError: If a branch cannot reach its corner.
        SingularityError: If a branch is at a flat elbow or a vanishing velocity denominator.
        ConvergenceError: If the refinement does not meet the tolerance.
        ValidationError: If a tip deflection exceeds l1/5.
    """
    n = basis.n
    modes = _split_modes(np.zeros(3 * n) if q_f is None else q_f, n)
    corners = platform_corner_positions(params, pose)
    results = {key: np.zeros(3) for key in ("q_a", "q_p", "beta1", "beta2", "angle_abc", "w")}
    max_iterations = 0
    max_residual = 0.0
    for i in range(3):
        w_tip, beta1, _, _ = _link_tip_data(basis, modes[i])
        if abs(w_tip) >= params.l1 / 5.0:
            raise ValidationError("LargeDeflection", "Tip deflection outside the small-deflection range", f"link {i + 1}: {w_tip:.4g} m")
        q_a, q_p, beta2, angle_abc = _closed_form_branch(params, i, corners[i], w_tip, beta1, config.assembly.elbows[i])
        corner_x, corner_y = float(corners[i, 0]), float(corners[i, 1])
        iteration = 0
        while True:
            x, y, ax, ay, px, py = _closure_terms(params, i, q_a, q_p, w_tip, beta1)
            ex, ey = x - corner_x, y - corner_y
            residual = max(abs(ex), abs(ey))
            if residual < config.tolerance:
                break
            if iteration >= config.max_iterations:
                raise ConvergenceError(
                    "LoopClosure", f"Branch {i + 1} did not close after {iteration} iterations", f"residual {residual:.3e} m"
                )
            determinant = ax * py - ay * px
            if abs(determinant) < _DETERMINANT_FLOOR:
                raise SingularityError("BranchSingular", f"Branch {i + 1} is singular", f"det={determinant:.3e}")
            q_a -= (ex * py - ey * px) / determinant
            q_p -= (ax * ey - ay * ex) / determinant
            iteration += 1
        results["q_a"][i], results["q_p"][i] = q_a, q_p
        results["beta1"][i], results["beta2"][i] = beta1, beta2
        results["angle_abc"][i], results["w"][i] = angle_abc, w_tip
        max_iterations = max(max_iterations, iteration)
        max_residual = max(max_residual, residual)
    return IkSolution(
        q_a=results["q_a"],
        q_p=results["q_p"],
        beta1=results["beta1"],
        beta2=results["beta2"],
        beta3=results["beta2"] - results["beta1"],
        angle_abc=results["angle_abc"],
        tip_deflection=results["w"],
        iterations=max_iterations,
        residual=max_residual,
    )


def forward_position(params: MechanismParams, basis: ModalBasis, q_a, q_p, q_f=None) -> np.ndarray:
    """End points C_i of the three open chains.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis of the actuation links.
        q_a: Actuated joint angles (3).
        q_p: Passive joint angles (3).
        q_f: Modal coordinates (3n), zeros if None.

    Returns:
        numpy.ndarray: A (3, 2) array ``P_Ai + l1 u_i + omega_i(l1) v_i + l2 w_i``.
    """
    modes = _split_modes(np.zeros(3 * basis.n) if q_f is None else q_f, basis.n)
    points = np.zeros((3, 2))
    for i in range(3):
        w_tip, beta1, _, _ = _link_tip_data(basis, modes[i])
        points[i] = _branch_closure(params, i, float(q_a[i]), float(q_p[i]), w_tip, beta1)[0]
    return points


def loop_closure_residual(params: MechanismParams, basis: ModalBasis, pose: PlatformPose, q_f, solution: IkSolution) -> float:
    """Largest distance between the chain end points and the platform corners (m)."""
    chains = forward_position(params, basis, solution.q_a, solution.q_p, q_f)
    return float(np.max(np.linalg.norm(chains - platform_corner_positions(params, pose), axis=1)))


def _joint_partials(params, basis, q_e, q_f, ik, q_dot=None):
    """Rows dq_a/dq and dq_p/dq, each 3 x (3+3n), by implicit differentiation of loop closure.

    With ``q_dot`` given, their time derivatives are returned as well (second implicit
    differentiation of the same equation).
    """
    n = basis.n
    width = 3 + 3 * n
    modes = q_f.reshape(3, n)
    dq_a, dq_p = np.zeros((3, width)), np.zeros((3, width))
    dq_a_dot, dq_p_dot = np.zeros((3, width)), np.zeros((3, width))
    theta = float(q_e[2])
    l1, l2, r = params.l1, params.l2, params.r
    for i in range(3):
        w_tip, beta1, phi_tip, dphi_tip = _link_tip_data(basis, modes[i])
        q_a_i, q_p_i = float(ik.q_a[i]), float(ik.q_p[i])
        _, _, ax, ay, px, py = _closure_terms(params, i, q_a_i, q_p_i, w_tip, beta1)
        angle = params.alpha[i] + q_a_i
        c, s = math.cos(angle), math.sin(angle)
        psi = angle + beta1 + q_p_i
        cw, sw = math.cos(psi), math.sin(psi)
        corner_angle = theta + params.alpha[i]
        sin_c, cos_c = math.sin(corner_angle), math.cos(corner_angle)
        determinant = ax * py - ay * px
        if abs(determinant) < _DETERMINANT_FLOOR:
            raise SingularityError("BranchSingular", f"Branch {i + 1} is singular", f"det={determinant:.3e}")
        # Rows of d(closure)/d(pose, q_f_i); the solution is -[d_q_a d_q_p]^-1 times them.
        rhs_x = np.concatenate(((-1.0, 0.0, r * sin_c), -s * phi_tip - l2 * sw * dphi_tip))
        rhs_y = np.concatenate(((0.0, -1.0, -r * cos_c), c * phi_tip + l2 * cw * dphi_tip))
        solution_a = (px * rhs_y - py * rhs_x) / determinant
        solution_p = (ay * rhs_x - ax * rhs_y) / determinant
        columns = np.r_[0:3, 3 + i * n : 3 + (i + 1) * n]
        dq_a[i, columns] = solution_a
        dq_p[i, columns] = solution_p
        if q_dot is None:
            continue
        local_rate = q_dot[columns]
        rate_a = float(solution_a @ local_rate)
        rate_p = float(solution_p @ local_rate)
        mode_rates = local_rate[3:]
        w_rate = float(phi_tip @ mode_rates) if n else 0.0
        slope_rate = float(dphi_tip @ mode_rates) if n else 0.0
        psi_rate = rate_a + slope_rate + rate_p
        along = l1 * rate_a + w_rate
        # Time derivative of [d_q_a d_q_p].
        ax_dot = -along * c + w_tip * rate_a * s - l2 * psi_rate * cw
        ay_dot = -along * s - w_tip * rate_a * c - l2 * psi_rate * sw
        px_dot = -l2 * psi_rate * cw
        py_dot = -l2 * psi_rate * sw
        rhs_dot_x = np.concatenate(((0.0, 0.0, r * cos_c * q_dot[2]), -rate_a * c * phi_tip - l2 * psi_rate * cw * dphi_tip))
        rhs_dot_y = np.concatenate(((0.0, 0.0, r * sin_c * q_dot[2]), -rate_a * s * phi_tip - l2 * psi_rate * sw * dphi_tip))
        rhs_dot_x += ax_dot * solution_a + px_dot * solution_p
        rhs_dot_y += ay_dot * solution_a + py_dot * solution_p
        dq_a_dot[i, columns] = (px * rhs_dot_y - py * rhs_dot_x) / determinant
        dq_p_dot[i, columns] = (ay * rhs_dot_x - ax * rhs_dot_y) / determinant
    if q_dot is None:
        return dq_a, dq_p, None, None
    return dq_a, dq_p, dq_a_dot, dq_p_dot


def _stack(dq_a, dq_p, modal_block):
    J = np.vstack((dq_a, modal_block))
    S = np.vstack((dq_a, dq_p, modal_block))
    return J, S


def _assemble(params, basis, q_e, q_f, config, q_dot=None):
    ik = inverse_kinematics(params, basis, PlatformPose.from_array(q_e), q_f, config)
    dq_a, dq_p, dq_a_dot, dq_p_dot = _joint_partials(params, basis, q_e, q_f, ik, q_dot)
    n = basis.n
    J, S = _stack(dq_a, dq_p, np.hstack((np.zeros((3 * n, 3)), np.eye(3 * n))))
    S_dot = None
    if q_dot is not None:
        S_dot = np.vstack((dq_a_dot, dq_p_dot, np.zeros((3 * n, 3 + 3 * n))))
    return ik, J, S, S_dot


def _state_vectors(basis: ModalBasis, state: GeneralizedState):
    if state.n != basis.n:
        raise ValidationError("DimensionMismatch", "State and basis have different modal orders", f"{state.n} != {basis.n}")
    return state.q_e, state.q_f


def compute_jacobians(
    params: MechanismParams,
    basis: ModalBasis,
    state: GeneralizedState,
    config: KinematicsConfig = DEFAULT_KINEMATICS,
    with_s_dot: bool = False,
) -> Jacobians:
    """Evaluate J, S and optionally S_dot at a state.

    ``S_dot`` comes from differentiating the implicit velocity relation once more
    (``config.s_dot_method == "analytic"``) or from a central difference of S along the current
    velocity with a step of ``config.fd_step`` in q-space (``"finite_difference"``).

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis.
        state: Generalized state; rates are used only for S_dot.
        config: Kinematics settings.
        with_s_dot: Whether to evaluate S_dot.

    Returns:
        Jacobians: The velocity maps at the state.

    Raises:
        SingularityError: If ``|det J_ax| < 1e-12`` or a branch is singular.
    """
    q_e, q_f = _state_vectors(basis, state)
    analytic = with_s_dot and config.s_dot_method == "analytic"
    ik, J, S, S_dot = _assemble(params, basis, q_e, q_f, config, state.q_dot if analytic else None)
    J_ax = J[:3, :3]
    determinant = np.linalg.det(J_ax)
    if abs(determinant) < _DETERMINANT_FLOOR:
        raise SingularityError("SingularJacobian", "J_ax is singular", f"det={determinant:.3e}")
    if with_s_dot and not analytic:
        S_dot = _directional_derivative(params, basis, state, config)
    return Jacobians(J=J, S=S, S_dot=S_dot, ik=ik)


def _directional_derivative(params, basis, state, config) -> np.ndarray:
    q = state.q
    q_dot = state.q_dot
    speed = float(np.linalg.norm(q_dot))
    n = basis.n
    if speed == 0.0:
        return np.zeros((6 + 3 * n, 3 + 3 * n))
    epsilon = config.fd_step / speed
    forward = q + epsilon * q_dot
    backward = q - epsilon * q_dot
    S_plus = _assemble(params, basis, forward[:3], forward[3:], config)[2]
    S_minus = _assemble(params, basis, backward[:3], backward[3:], config)[2]
    return (S_plus - S_minus) / (2.0 * epsilon)


def jacobian_J(params: MechanismParams, basis: ModalBasis, state: GeneralizedState, config: KinematicsConfig = DEFAULT_KINEMATICS) -> np.ndarray:
    """The driven-coordinate Jacobian J at a state."""
    return compute_jacobians(params, basis, state, config).J


def jacobian_S(params: MechanismParams, basis: ModalBasis, state: GeneralizedState, config: KinematicsConfig = DEFAULT_KINEMATICS) -> np.ndarray:
    """The joint-space Jacobian S at a state."""
    return compute_jacobians(params, basis, state, config).S


def jacobian_S_dot(params: MechanismParams, basis: ModalBasis, state: GeneralizedState, config: KinematicsConfig = DEFAULT_KINEMATICS) -> np.ndarray:
    """Time derivative of S along the state's velocity, by the configured method."""
    return compute_jacobians(params, basis, state, config, with_s_dot=True).S_dot


def passive_rates(
    params: MechanismParams,
    basis: ModalBasis,
    state: GeneralizedState,
    corner_velocities: Optional[np.ndarray] = None,
    config: KinematicsConfig = DEFAULT_KINEMATICS,
) -> Tuple[np.ndarray, np.ndarray]:
    """Actuated joint rates and intermediate-link angular velocities by velocity projection.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis.
        state: Generalized state (pose, modal coordinates and their rates).
        corner_velocities: Velocities of the platform joints (3, 2); derived from the pose rate if None.
        config: Kinematics settings.

    Returns:
        tuple: ``(q_a_dot, omega_2)``, each of length 3 (rad/s).

    Raises:
        SingularityError: If ``|l1 v_i.w_i - omega_i(l1) u_i.w_i| <= 1e-9`` for a branch.
    """
    q_e, q_f = _state_vectors(basis, state)
    pose = PlatformPose.from_array(q_e)
    ik = inverse_kinematics(params, basis, pose, q_f, config)
    if corner_velocities is None:
        corner_velocities = platform_corner_velocities(params, pose, state.q_e_dot)
    q_a_dot = np.zeros(3)
    omega = np.zeros(3)
    for i in range(3):
        w_tip, _, phi_tip, dphi_tip = _link_tip_data(basis, state.link_modes(i))
        rates = state.link_mode_rates(i)
        w_rate = float(phi_tip @ rates) if basis.n else 0.0
        angle = params.alpha[i] + ik.q_a[i]
        u = unit(angle)
        v = perp(u)
        w_dir = unit(angle + ik.beta1[i] + ik.q_p[i])
        denominator = params.l1 * (v @ w_dir) - w_tip * (u @ w_dir)
        if abs(denominator) <= _DENOMINATOR_FLOOR:
            raise SingularityError("BranchSingular", f"Branch {i + 1} velocity projection vanishes", f"{denominator:.3e}")
        velocity = corner_velocities[i]
        q_a_dot[i] = (velocity @ w_dir - w_rate * (v @ w_dir)) / denominator
        relative = velocity - (params.l1 * q_a_dot[i] + w_rate) * v + w_tip * q_a_dot[i] * u
        omega[i] = (relative @ perp(w_dir)) / params.l2
    return q_a_dot, omega
