"""Forward-dynamics truth plant."""

import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from flexpm.core.kinematics import DEFAULT_KINEMATICS, Jacobians, KinematicsConfig, compute_jacobians
from flexpm.core.mechanism_config import MechanismParams, PlatformPose
from flexpm.core.modal_basis import BoundaryCondition, ModalBasis, deformation_profile, natural_frequencies
from flexpm.core.state import GeneralizedState
from flexpm.dynamics.energy import potential_energy
from flexpm.dynamics.eom import EomMatrices, assemble_eom, constant_matrices, link_mass, link_stiffness, reduced_mass_matrix
from flexpm.errors import IntegrityError, ValidationError

logger = logging.getLogger(__name__)

INTEGRATORS = ("rk4", "semi-implicit")


@dataclass
class PlantConfig:
    """Configuration of the truth plant.

    Attributes:
        n_modes: Modal order per actuation link.
        boundary: Boundary-condition family of the plant's mode shapes.
        dt: Integration step (s).
        integrator: ``"rk4"`` or ``"semi-implicit"``.
        damping_ratio: Modal damping ratio (0 keeps the model conservative).
        energy_tolerance: Relative energy-balance tolerance checked after every step, or None.
        coriolis_method: ``"analytic"`` or ``"finite_difference"`` mass-matrix partials.
    """

    n_modes: int = 5
    boundary: str = "CF"
    dt: float = 1e-4
    integrator: str = "rk4"
    damping_ratio: float = 0.0
    energy_tolerance: Optional[float] = None
    coriolis_method: str = "analytic"

    def validate(self):
        if self.n_modes < 0:
            raise ValidationError("BadOrder", "Plant modal order must be non-negative", f"n_modes={self.n_modes}")
        if self.dt <= 0:
            raise ValidationError("BadStep", "Plant step must be positive", f"dt={self.dt}")
        if self.integrator not in INTEGRATORS:
            raise ValidationError("BadIntegrator", f"Unknown integrator '{self.integrator}'", f"one of {INTEGRATORS}")
        BoundaryCondition.parse(self.boundary)

    def make_basis(self, params: MechanismParams) -> ModalBasis:
        return ModalBasis.create(self.boundary, params.l1, self.n_modes)

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "PlantConfig":
        valid_fields = {k: v for k, v in config_dict.items() if k in cls.__dataclass_fields__}
        return cls(**valid_fields)

    def to_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if not k.startswith("_")}


@dataclass
class VirtualFixture:
    """Stiff spring-damper holding the platform at a pose through a generalized force on q_e.

    Gains are scaled by the bare platform inertia ``diag(m_e, m_e, J_e)`` so that ``frequency``
    and ``damping_ratio`` describe the platform alone; the branches add inertia and lower both.

    Attributes:
        pose: Held pose.
        frequency: Nominal natural frequency (Hz).
        damping_ratio: Nominal damping ratio.
    """

    pose: PlatformPose = field(default_factory=PlatformPose)
    frequency: float = 300.0
    damping_ratio: float = 0.7

    def gains(self, params: MechanismParams) -> Tuple[np.ndarray, np.ndarray]:
        """``(stiffness, damping)`` per pose axis."""
        inertia = np.array([params.m_e, params.m_e, params.J_e])
        omega = 2.0 * math.pi * self.frequency
        return inertia * omega**2, 2.0 * self.damping_ratio * omega * inertia

    def force(self, params: MechanismParams, state: GeneralizedState) -> np.ndarray:
        """Generalized force (3+3n) holding the platform."""
        stiffness, damping = self.gains(params)
        Q = np.zeros(state.q.size)
        Q[:3] = -stiffness * (state.q_e - self.pose.as_array()) - damping * state.q_e_dot
        return Q


@dataclass(frozen=True, eq=False)
class PlantState:
    """Plant state with its energy ledger.

    ``kinetic`` and ``potential`` are None when the step skipped the energy evaluation;
    ``energy`` and ``energy_error`` are then NaN.

    Attributes:
        state: Generalized coordinates and rates.
        t: Simulation time (s).
        kinetic: Kinetic energy T (J), or None.
        potential: Potential energy V (J), or None.
        work_in: Work of actuator and external forces since the start (J).
        dissipated: Energy removed by modal damping since the start (J).
        initial_energy: T + V at the start (J).
    """

    state: GeneralizedState
    t: float = 0.0
    kinetic: Optional[float] = 0.0
    potential: Optional[float] = 0.0
    work_in: float = 0.0
    dissipated: float = 0.0
    initial_energy: float = 0.0

    @property
    def has_energy(self) -> bool:
        return self.kinetic is not None and self.potential is not None

    @property
    def energy(self) -> float:
        if not self.has_energy:
            return float("nan")
        return self.kinetic + self.potential

    @property
    def energy_error(self) -> float:
        """Departure from ``T + V = E0 + W_in - W_d`` (J)."""
        return self.energy - self.initial_energy - self.work_in + self.dissipated


@contextmanager
def deflection_guard(t: float):
    """Report a deflection outside the small-deflection range as a plant integrity failure."""
    try:
        yield
    except ValidationError as ex:
        if ex.code != "LargeDeflection":
            raise
        raise IntegrityError("LargeDeflection", "Plant deflection left the small-deflection range", f"{ex.detail} at t={t:.6f}") from ex


def _torque_vector(tau, n: int) -> Tuple[np.ndarray, np.ndarray]:
    tau = np.asarray(tau, dtype=float).reshape(-1)
    if tau.size == 3:
        return tau, np.zeros(3 * n)
    if tau.size == 3 + 3 * n:
        return tau[:3], tau[3:]
    raise ValidationError("DimensionMismatch", "Torque must have 3 or 3+3n entries", f"got {tau.size}")


def accelerations(
    params: MechanismParams,
    basis: ModalBasis,
    state: GeneralizedState,
    tau,
    kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
    damping_ratio: float = 0.0,
    coriolis_method: str = "analytic",
    jacobians: Optional[Jacobians] = None,
    constants: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    external: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, EomMatrices, np.ndarray]:
    """Solve ``M_hat q_ddot = J^T tau + Q_ext - (C_hat + D_hat) q_dot - K_hat q``.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis.
        state: Generalized state.
        tau: Actuated torques (3) or actuated torques and modal forces (3+3n).
        kinematics: Kinematics settings.
        damping_ratio: Modal damping ratio.
        coriolis_method: How mass-matrix partials are formed.
        jacobians: Jacobians with S_dot already evaluated at ``state``, or None.
        constants: Precomputed ``(K_hat, D_hat)``, or None.
        external: Additional generalized force (3+3n), or None.

    Returns:
        tuple: ``(q_ddot, eom, Q)`` with Q the total generalized force.
    """
    tau_a, tau_f = _torque_vector(tau, basis.n)
    eom = assemble_eom(params, basis, state, kinematics, damping_ratio, coriolis_method, jacobians, constants)
    Q = eom.jacobians.J.T @ np.concatenate((tau_a, tau_f))
    if external is not None:
        Q = Q + external
    q_dot = state.q_dot
    rhs = Q - (eom.C_hat + eom.D_hat) @ q_dot - eom.K_hat @ state.q
    q_ddot = eom.solve(rhs)
    if not np.all(np.isfinite(q_ddot)):
        raise IntegrityError("NonFinite", "Accelerations are not finite", f"state norm {np.linalg.norm(state.q):.3e}")
    return q_ddot, eom, Q


def mechanical_energy(params: MechanismParams, basis: ModalBasis, state: GeneralizedState, kinematics=DEFAULT_KINEMATICS) -> Tuple[float, float]:
    """``(T, V)`` from the reduced mass matrix and the link stiffness."""
    M_hat = reduced_mass_matrix(params, basis, state, kinematics)
    q_dot = state.q_dot
    return 0.5 * float(q_dot @ M_hat @ q_dot), potential_energy(params, basis, state.q_f)


def initial_plant_state(params, basis, state: GeneralizedState, kinematics=DEFAULT_KINEMATICS) -> PlantState:
    """Wrap a generalized state with a fresh energy ledger at t = 0."""
    kinetic, potential = mechanical_energy(params, basis, state, kinematics)
    return PlantState(state=state, kinetic=kinetic, potential=potential, initial_energy=kinetic + potential)


def with_energy(params, basis, plant_state: PlantState, kinematics=DEFAULT_KINEMATICS) -> PlantState:
    """``plant_state`` with T and V filled in."""
    if plant_state.has_energy:
        return plant_state
    with deflection_guard(plant_state.t):
        kinetic, potential = mechanical_energy(params, basis, plant_state.state, kinematics)
    return replace(plant_state, kinetic=kinetic, potential=potential)


def forward_dynamics_step(
    params: MechanismParams,
    basis: ModalBasis,
    plant_state: PlantState,
    tau,
    dt: float,
    integrator: str = "rk4",
    kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
    damping_ratio: float = 0.0,
    coriolis_method: str = "analytic",
    energy_tolerance: Optional[float] = None,
    jacobians: Optional[Jacobians] = None,
    fixture: Optional[VirtualFixture] = None,
    evaluate_energy: bool = True,
) -> PlantState:
    """Advance the plant by one step with the torque held constant.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis.
        plant_state: Current plant state.
        tau: Held torque, 3 or 3+3n entries.
        dt: Step (s).
        integrator: ``"rk4"`` or ``"semi-implicit"`` (symplectic Euler).
        kinematics: Kinematics settings.
        damping_ratio: Modal damping ratio.
        coriolis_method: How mass-matrix partials are formed.
        energy_tolerance: Relative energy-balance tolerance, or None to skip the check.
        jacobians: Jacobians with S_dot at the current state, reused by the first stage.
        fixture: Optional virtual fixture acting on the platform.
        evaluate_energy: Whether to evaluate T and V at the new state; always done when
            ``energy_tolerance`` is set.

    Returns:
        PlantState: The state at ``t + dt``.

    Raises:
        ValidationError: If ``dt`` is not positive or the integrator is unknown.
        IntegrityError: On an indefinite mass matrix, non-finite values, a deflection outside
            the small-deflection range or energy drift.
    """
    if dt <= 0:
        raise ValidationError("BadStep", "Step must be positive", f"dt={dt}")
    if integrator not in INTEGRATORS:
        raise ValidationError("BadIntegrator", f"Unknown integrator '{integrator}'", f"one of {INTEGRATORS}")
    size = plant_state.state.q.size
    constants = constant_matrices(params, basis, damping_ratio)

    def derivative(x, stage_jacobians=None):
        stage_state = GeneralizedState.from_vectors(x[:size], x[size:])
        external = None if fixture is None else fixture.force(params, stage_state)
        q_ddot, eom, Q = accelerations(params, basis, stage_state, tau, kinematics, damping_ratio, coriolis_method, stage_jacobians, constants, external)
        q_dot = x[size:]
        return np.concatenate((q_dot, q_ddot)), float(q_dot @ Q), float(q_dot @ eom.D_hat @ q_dot)

    x = np.concatenate((plant_state.state.q, plant_state.state.q_dot))
    with deflection_guard(plant_state.t):
        if integrator == "rk4":
            k1, p1, d1 = derivative(x, jacobians)
            k2, p2, d2 = derivative(x + 0.5 * dt * k1)
            k3, p3, d3 = derivative(x + 0.5 * dt * k2)
            k4, p4, d4 = derivative(x + dt * k3)
            x_next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            work = dt / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
            dissipated = dt / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        else:
            k1, p1, d1 = derivative(x, jacobians)
            velocity = x[size:] + dt * k1[size:]
            x_next = np.concatenate((x[:size] + dt * velocity, velocity))
            work, dissipated = dt * p1, dt * d1
    if not np.all(np.isfinite(x_next)):
        raise IntegrityError("NonFinite", "Integration produced non-finite values", f"t={plant_state.t + dt:.6f}")
    result = PlantState(
        state=GeneralizedState.from_vectors(x_next[:size], x_next[size:]),
        t=plant_state.t + dt,
        kinetic=None,
        potential=None,
        work_in=plant_state.work_in + work,
        dissipated=plant_state.dissipated + dissipated,
        initial_energy=plant_state.initial_energy,
    )
    if evaluate_energy or energy_tolerance is not None:
        result = with_energy(params, basis, result, kinematics)
    if energy_tolerance is not None:
        scale = max(abs(result.initial_energy), abs(result.work_in), 1e-12)
        drift = abs(result.energy_error) / scale
        if drift > energy_tolerance:
            raise IntegrityError("EnergyDrift", "Energy balance violated", f"relative drift {drift:.3e} at t={result.t:.6f}")
    return result


class Plant:
    """Stateful truth plant advancing with a zero-order-hold torque.

    T and V are evaluated after a step only when ``config.energy_tolerance`` is set; otherwise
    :meth:`energy_state` evaluates them on demand.

    Parameters:
        params: Mechanism parameters.
        config: Plant configuration.
        state: Initial generalized state; its modal order must match ``config.n_modes``.
        kinematics: Kinematics settings.
        fixture: Optional virtual fixture acting on the platform.
    """

    def __init__(
        self,
        params: MechanismParams,
        config: PlantConfig,
        state: GeneralizedState,
        kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
        fixture: Optional[VirtualFixture] = None,
    ):
        config.validate()
        self.params = params
        self.config = config
        self.kinematics = kinematics
        self.fixture = fixture
        self.basis = config.make_basis(params)
        if state.n != self.basis.n:
            raise ValidationError("DimensionMismatch", "Initial state order differs from the plant order", f"{state.n} != {self.basis.n}")
        self._check_step()
        self.plant_state = initial_plant_state(params, self.basis, state, kinematics)
        self._jacobians: Optional[Jacobians] = None

    @classmethod
    def at_pose(
        cls,
        params: MechanismParams,
        config: PlantConfig,
        pose: PlatformPose,
        q_f=None,
        kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
        fixture: Optional[VirtualFixture] = None,
    ) -> "Plant":
        """A plant at rest at ``pose`` with optional initial modal coordinates."""
        return cls(params, config, GeneralizedState.at_rest(pose, config.n_modes, q_f), kinematics, fixture)

    def _check_step(self):
        if self.basis.n == 0:
            return
        _, frequencies = natural_frequencies(self.basis, self.params.EI, self.params.rho)
        f_max = float(frequencies[-1])
        if self.config.dt > 1.0 / (20.0 * f_max):
            logger.warning(f"Plant step {self.config.dt:g} s does not resolve the highest mode ({f_max:.1f} Hz) by 20 steps per period")

    @property
    def t(self) -> float:
        return self.plant_state.t

    @property
    def state(self) -> GeneralizedState:
        return self.plant_state.state

    @property
    def pose(self) -> PlatformPose:
        return self.state.pose

    def step(self, tau) -> PlantState:
        """Advance by one plant step with torque ``tau`` held."""
        self.plant_state = forward_dynamics_step(
            self.params,
            self.basis,
            self.plant_state,
            tau,
            self.config.dt,
            self.config.integrator,
            self.kinematics,
            self.config.damping_ratio,
            self.config.coriolis_method,
            self.config.energy_tolerance,
            jacobians=self._jacobians,
            fixture=self.fixture,
            evaluate_energy=False,
        )
        self._jacobians = None
        return self.plant_state

    def advance(self, tau, duration: float) -> PlantState:
        """Advance by ``duration`` seconds with ``tau`` held (rounded to whole steps)."""
        for _ in range(int(round(duration / self.config.dt))):
            self.step(tau)
        return self.plant_state

    def energy_state(self) -> PlantState:
        """The current plant state with T and V evaluated."""
        self.plant_state = with_energy(self.params, self.basis, self.plant_state, self.kinematics)
        return self.plant_state

    def _joints(self) -> Jacobians:
        # Evaluated with S_dot so the next step's first stage can reuse it.
        if self._jacobians is None:
            with deflection_guard(self.t):
                self._jacobians = compute_jacobians(self.params, self.basis, self.state, self.kinematics, with_s_dot=True)
        return self._jacobians

    def joint_angles(self) -> np.ndarray:
        """Actuated joint angles q_a (rad)."""
        return self._joints().ik.q_a.copy()

    def joint_rates(self) -> np.ndarray:
        """Actuated joint rates (rad/s)."""
        return self._joints().J[:3] @ self.state.q_dot

    def passive_angles(self) -> np.ndarray:
        return self._joints().ik.q_p.copy()

    def tip_deflections(self) -> np.ndarray:
        """Tip deflection of each actuation link (m)."""
        return self._joints().ik.tip_deflection.copy()

    def deflection_at(self, link: int, xs) -> np.ndarray:
        """Deflection of ``link`` (0-based) at abscissae ``xs`` (m)."""
        return deformation_profile(self.basis, self.state.link_modes(link), xs)


def clamped_platform_frequencies(
    params: MechanismParams,
    basis: ModalBasis,
    pose: PlatformPose = PlatformPose(),
    kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
) -> np.ndarray:
    """Natural frequencies (Hz) of each link with the platform held at ``pose``.

    With q_e fixed the modal block of the reduced mass matrix at rest governs the small
    vibration. It is block diagonal per link, so each row holds the ascending generalized
    eigenvalues of that link's ``(K_ff, M_ff)`` block. The actuated joint and the intermediate
    link move with the deflection, so these differ from the clamped-free frequencies of an
    isolated link.

    Returns:
        numpy.ndarray: Frequencies of shape ``(3, n)``.
    """
    n = basis.n
    frequencies = np.zeros((3, n))
    if n == 0:
        return frequencies
    state = GeneralizedState.at_rest(pose, n)
    M_ff = reduced_mass_matrix(params, basis, state, kinematics)[3:, 3:]
    K_link = link_stiffness(params, basis)
    for i in range(3):
        block = M_ff[i * n : (i + 1) * n, i * n : (i + 1) * n]
        eigenvalues = linalg.eigh(K_link, 0.5 * (block + block.T), eigvals_only=True)
        frequencies[i] = np.sqrt(np.clip(eigenvalues, 0.0, None)) / (2.0 * math.pi)
    return frequencies


def plant_ring_down(
    params: MechanismParams,
    config: PlantConfig,
    q_f0,
    duration: float,
    pose: PlatformPose = PlatformPose(),
    fixture: Optional[VirtualFixture] = None,
    kinematics: KinematicsConfig = DEFAULT_KINEMATICS,
) -> Tuple[np.ndarray, np.ndarray]:
    """Free vibration of the full plant with zero torque and the platform held by a fixture.

    Parameters:
        params: Mechanism parameters.
        config: Plant configuration.
        q_f0: Initial modal coordinates (3n).
        duration: Simulated time (s).
        pose: Pose at which the platform is held.
        fixture: Fixture holding the platform; a default one at ``pose`` when None.
        kinematics: Kinematics settings.

    Returns:
        tuple: ``(t, q_f)`` with ``q_f`` of shape ``(steps + 1, 3n)``.
    """
    fixture = fixture if fixture is not None else VirtualFixture(pose=pose)
    plant = Plant.at_pose(params, config, pose, q_f0, kinematics, fixture)
    steps = int(math.ceil(duration / config.dt - 1e-9))
    history = np.zeros((steps + 1, plant.state.q_f.size))
    history[0] = plant.state.q_f
    tau = np.zeros(3)
    for k in range(1, steps + 1):
        plant.step(tau)
        history[k] = plant.state.q_f
    logger.info(f"Plant ring-down of {duration:g} s at {config.dt:g} s steps done")
    return np.arange(steps + 1) * config.dt, history


def flexible_link_ring_down(
    params: MechanismParams,
    basis: ModalBasis,
    q_f0,
    duration: float,
    dt: float = 1e-4,
    integrator: str = "rk4",
    damping_ratio: float = 0.0,
    callback: Optional[Callable[[float, np.ndarray], None]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Free vibration of one isolated actuation link with its joint locked and its tip released.

    This is the clamped-free oracle for the modal basis; :func:`plant_ring_down` exercises the
    coupled plant.

    Parameters:
        params: Mechanism parameters.
        basis: Modal basis of the link.
        q_f0: Initial modal coordinates (n).
        duration: Simulated time (s).
        dt: Step (s).
        integrator: ``"rk4"`` or ``"semi-implicit"``.
        damping_ratio: Modal damping ratio.
        callback: Optional ``callback(t, q_f)`` after each step.

    Returns:
        tuple: ``(t, q_f)`` with ``q_f`` of shape ``(steps + 1, n)``.
    """
    if integrator not in INTEGRATORS:
        raise ValidationError("BadIntegrator", f"Unknown integrator '{integrator}'")
    n = basis.n
    M = link_mass(params, basis)
    K = link_stiffness(params, basis)
    D = np.zeros((n, n))
    if damping_ratio:
        eigenvalues, vectors = linalg.eigh(K, M)
        D = M @ vectors @ np.diag(2.0 * damping_ratio * np.sqrt(eigenvalues)) @ vectors.T @ M
    M_inv_K = np.linalg.solve(M, K)
    M_inv_D = np.linalg.solve(M, D)

    def acceleration(q, q_dot):
        return -M_inv_K @ q - M_inv_D @ q_dot

    steps = int(math.ceil(duration / dt - 1e-9))
    q = np.asarray(q_f0, dtype=float).copy()
    q_dot = np.zeros(n)
    history = np.zeros((steps + 1, n))
    history[0] = q
    for k in range(1, steps + 1):
        if integrator == "rk4":
            a1 = acceleration(q, q_dot)
            v2 = q_dot + 0.5 * dt * a1
            a2 = acceleration(q + 0.5 * dt * q_dot, v2)
            v3 = q_dot + 0.5 * dt * a2
            a3 = acceleration(q + 0.5 * dt * v2, v3)
            v4 = q_dot + dt * a3
            a4 = acceleration(q + dt * v3, v4)
            q = q + dt / 6.0 * (q_dot + 2.0 * v2 + 2.0 * v3 + v4)
            q_dot = q_dot + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        else:
            q_dot = q_dot + dt * acceleration(q, q_dot)
            q = q + dt * q_dot
        history[k] = q
        if callback is not None:
            callback(k * dt, q)
    return np.arange(steps + 1) * dt, history
