"""Tests for the equations of motion and the truth plant."""

import math
import os
import time
import unittest

import numpy as np

from flexpm.core.kinematics import compute_jacobians
from flexpm.core.mechanism_config import PlatformPose, reference_params
from flexpm.core.modal_basis import ModalBasis, natural_frequencies
from flexpm.core.state import GeneralizedState
from flexpm.dynamics.energy import kinetic_energy, potential_energy
from flexpm.dynamics.eom import (
    assemble_eom,
    generalized_force_map,
    link_stiffness,
    modal_damping_matrix,
    reduced_mass_matrix,
)
from flexpm.dynamics.plant import (
    Plant,
    PlantConfig,
    PlantState,
    VirtualFixture,
    clamped_platform_frequencies,
    flexible_link_ring_down,
    forward_dynamics_step,
    initial_plant_state,
    plant_ring_down,
)
from flexpm.errors import IntegrityError, ValidationError

SLOW = os.environ.get("FLEXPM_SLOW_TESTS") == "1"


def dominant_frequency(t: np.ndarray, signal: np.ndarray, padding: int = 1 << 18) -> float:
    """Peak of the zero-padded, Hann-windowed spectrum of ``signal`` (Hz)."""
    samples = signal - np.mean(signal)
    spectrum = np.abs(np.fft.rfft(samples * np.hanning(samples.size), n=padding))
    frequencies = np.fft.rfftfreq(padding, d=float(t[1] - t[0]))
    return float(frequencies[1 + np.argmax(spectrum[1:])])


class TestEom(unittest.TestCase):
    """Tests for assemble_eom and its ingredients."""

    def setUp(self):
        self.params = reference_params()
        self.basis = ModalBasis.create("CF", self.params.l1, 2)
        q = np.array([0.04, 0.03, -0.05, 2e-3, -1e-4, -1e-3, 2e-4, 5e-4, 0.0])
        q_dot = np.array([0.2, -0.1, 0.3, 0.02, -0.01, 0.0, 0.03, -0.02, 0.01])
        self.state = GeneralizedState.from_vectors(q, q_dot)

    def test_mass_matrix_symmetric_positive(self):
        """Test M_hat is symmetric positive definite."""
        eom = assemble_eom(self.params, self.basis, self.state)
        np.testing.assert_allclose(eom.M_hat, eom.M_hat.T, atol=1e-14)
        self.assertGreater(np.min(np.linalg.eigvalsh(eom.M_hat)), 0.0)
        np.testing.assert_allclose(eom.M_hat, reduced_mass_matrix(self.params, self.basis, self.state), atol=1e-12)

    def test_kinetic_energy_agrees(self):
        """Test the quadratic form of M_hat equals the body-by-body kinetic energy."""
        M_hat = reduced_mass_matrix(self.params, self.basis, self.state)
        quadratic = 0.5 * self.state.q_dot @ M_hat @ self.state.q_dot
        self.assertAlmostEqual(quadratic, kinetic_energy(self.params, self.basis, self.state).total, delta=1e-6 * quadratic)

    def test_passivity(self):
        """Test dM_hat/dt - 2 C_hat is skew-symmetric."""
        eom = assemble_eom(self.params, self.basis, self.state)
        step = 1e-6
        forward = GeneralizedState.from_vectors(self.state.q + step * self.state.q_dot)
        backward = GeneralizedState.from_vectors(self.state.q - step * self.state.q_dot)
        M_dot = (reduced_mass_matrix(self.params, self.basis, forward) - reduced_mass_matrix(self.params, self.basis, backward)) / (2 * step)
        N = M_dot - 2.0 * eom.C_hat
        np.testing.assert_allclose(N + N.T, 0.0, atol=1e-6 * max(1.0, np.max(np.abs(M_dot))))

    def test_coriolis_methods_agree(self):
        """Test analytic and finite-difference mass partials give the same C_hat."""
        analytic = assemble_eom(self.params, self.basis, self.state).C_hat
        numeric = assemble_eom(self.params, self.basis, self.state, coriolis_method="finite_difference").C_hat
        np.testing.assert_allclose(analytic, numeric, atol=1e-6 * max(1.0, np.max(np.abs(analytic))))

    def test_virtual_work(self):
        """Test the reduced and joint-space generalized forces do the same power."""
        jacobians = compute_jacobians(self.params, self.basis, self.state)
        tau_a = np.array([1.5, -0.7, 0.3])
        tau_f = np.array([0.1, 0.0, -0.2, 0.05, 0.0, 0.3])
        Q, Q_w = generalized_force_map(jacobians, tau_a, tau_f)
        q_w_dot = jacobians.S @ self.state.q_dot
        self.assertAlmostEqual(float(Q @ self.state.q_dot), float(Q_w @ q_w_dot), places=10)

    def test_stiffness_and_potential(self):
        """Test the modal stiffness is diagonal in the clamped-free basis and V is its quadratic form."""
        K = link_stiffness(self.params, self.basis)
        omega, _ = natural_frequencies(self.basis, self.params.EI, self.params.rho)
        np.testing.assert_allclose(np.diag(K), self.params.EI * np.asarray(self.basis.roots) ** 4 * self.params.l1 / 4, rtol=1e-7)
        q_f = self.state.q_f
        expected = 0.5 * sum(q_f[2 * i : 2 * i + 2] @ K @ q_f[2 * i : 2 * i + 2] for i in range(3))
        self.assertAlmostEqual(potential_energy(self.params, self.basis, q_f), expected, places=14)
        self.assertTrue(np.all(omega > 0))

    def test_damping(self):
        """Test zero damping gives a zero matrix and negative damping is rejected."""
        np.testing.assert_array_equal(modal_damping_matrix(self.params, self.basis, 0.0), 0.0)
        D = modal_damping_matrix(self.params, self.basis, 0.02)
        np.testing.assert_array_equal(D[:3], 0.0)
        self.assertGreater(np.min(np.linalg.eigvalsh(D[3:, 3:])), 0.0)
        with self.assertRaises(ValidationError):
            modal_damping_matrix(self.params, self.basis, -0.1)


class TestPlant(unittest.TestCase):
    """Tests for the integrated plant."""

    def setUp(self):
        self.params = reference_params()
        self.config = PlantConfig(n_modes=1, dt=1e-4)

    def test_pure_step(self):
        """Test the stateless step reproduces the plant object."""
        basis = self.config.make_basis(self.params)
        plant = Plant.at_pose(self.params, self.config, PlatformPose(0.02, 0.01, 0.0), q_f=[1e-3, 0.0, 0.0])
        record = initial_plant_state(self.params, basis, plant.state)
        tau = np.array([0.1, -0.05, 0.0])
        for _ in range(3):
            record = forward_dynamics_step(self.params, basis, record, tau, self.config.dt)
            plant.step(tau)
        np.testing.assert_allclose(record.state.q, plant.state.q, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(record.state.q_dot, plant.state.q_dot, rtol=1e-12, atol=1e-15)
        self.assertAlmostEqual(record.t, 3e-4)
        with self.assertRaises(ValidationError):
            forward_dynamics_step(self.params, basis, record, tau, 0.0)
        with self.assertRaises(ValidationError):
            forward_dynamics_step(self.params, basis, record, tau, 1e-4, integrator="euler")

    def test_free_energy_conservation(self):
        """Test a released deflection keeps T + V constant without damping."""
        plant = Plant.at_pose(self.params, self.config, PlatformPose(), q_f=[2e-3, 0.0, -1e-3])
        initial = plant.plant_state.energy
        self.assertGreater(initial, 0.0)
        for _ in range(200):
            plant.step(np.zeros(3))
        self.assertAlmostEqual(plant.t, 0.02, places=12)
        self.assertLess(abs(plant.energy_state().energy_error), 1e-6 * initial)

    def test_work_balance(self):
        """Test actuator work accounts for the energy gained under a held torque."""
        plant = Plant.at_pose(self.params, self.config, PlatformPose())
        plant.advance([0.5, -0.2, 0.1], 0.01)
        state = plant.energy_state()
        self.assertGreater(state.work_in, 0.0)
        self.assertLess(abs(state.energy_error), 1e-5 * state.work_in)

    def test_damping_dissipates(self):
        """Test modal damping removes energy from a released deflection."""
        config = PlantConfig(n_modes=1, dt=1e-4, damping_ratio=0.05)
        plant = Plant.at_pose(self.params, config, PlatformPose(), q_f=[2e-3, 2e-3, 2e-3])
        initial = plant.plant_state.energy
        plant.advance(np.zeros(3), 0.02)
        self.assertGreater(plant.plant_state.dissipated, 0.0)
        self.assertLess(plant.energy_state().energy, initial)

    def test_measurements(self):
        """Test joint readings and deflections of a plant at rest."""
        plant = Plant.at_pose(self.params, self.config, PlatformPose(), q_f=[1e-3, 0.0, 0.0])
        np.testing.assert_allclose(plant.joint_rates(), 0.0)
        np.testing.assert_allclose(plant.tip_deflections(), [1e-3, 0.0, 0.0], atol=1e-12)
        self.assertAlmostEqual(float(plant.deflection_at(0, [self.params.l1])[0]), 1e-3, places=12)
        self.assertEqual(plant.joint_angles().shape, (3,))

    def test_bad_config(self):
        """Test invalid plant settings are rejected."""
        with self.assertRaises(ValidationError):
            Plant.at_pose(self.params, PlantConfig(integrator="euler"), PlatformPose())
        with self.assertRaises(ValidationError):
            Plant.at_pose(self.params, PlantConfig(dt=0.0), PlatformPose())
        with self.assertRaises(ValidationError):
            Plant(self.params, self.config, GeneralizedState.at_rest(PlatformPose(), 2))

    def test_large_deflection_is_integrity_failure(self):
        """Test a deflection beyond a fifth of the link length stops a step as a numerical failure."""
        basis = self.config.make_basis(self.params)
        tip = float(basis.tip_values()[0])
        q_f = [0.5 * self.params.l1 / tip, 0.0, 0.0]
        record = PlantState(state=GeneralizedState.at_rest(PlatformPose(), 1, q_f))
        with self.assertRaises(IntegrityError) as context:
            forward_dynamics_step(self.params, basis, record, np.zeros(3), self.config.dt)
        self.assertEqual(context.exception.code, "LargeDeflection")
        self.assertEqual(context.exception.exit_code, 2)

    def test_energy_on_demand(self):
        """Test T and V are skipped after a step unless asked for or checked."""
        plant = Plant.at_pose(self.params, self.config, PlatformPose(), q_f=[1e-3, 0.0, 0.0])
        plant.step(np.zeros(3))
        self.assertFalse(plant.plant_state.has_energy)
        self.assertTrue(math.isnan(plant.plant_state.energy_error))
        record = plant.energy_state()
        self.assertTrue(record.has_energy)
        self.assertIs(plant.plant_state, record)
        checked = Plant.at_pose(self.params, PlantConfig(n_modes=1, dt=1e-4, energy_tolerance=1e-6), PlatformPose(), q_f=[1e-3, 0.0, 0.0])
        self.assertTrue(checked.step(np.zeros(3)).has_energy)

    def test_joint_reading_reused_by_step(self):
        """Test reading the joints before a step leaves the trajectory unchanged."""
        pose = PlatformPose(0.02, 0.01, 0.0)
        read = Plant.at_pose(self.params, self.config, pose, q_f=[1e-3, 0.0, -5e-4])
        unread = Plant.at_pose(self.params, self.config, pose, q_f=[1e-3, 0.0, -5e-4])
        tau = np.array([0.2, -0.1, 0.05])
        for _ in range(4):
            read.joint_angles()
            read.step(tau)
            unread.step(tau)
        np.testing.assert_allclose(read.state.q, unread.state.q, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(read.state.q_dot, unread.state.q_dot, rtol=1e-12, atol=1e-15)

    def test_fixture_work_balance(self):
        """Test a fixture pulling the platform back keeps the energy ledger balanced."""
        fixture = VirtualFixture(pose=PlatformPose(), frequency=50.0)
        plant = Plant.at_pose(self.params, self.config, PlatformPose(1e-3, 0.0, 0.0), fixture=fixture)
        plant.advance(np.zeros(3), 0.02)
        record = plant.energy_state()
        self.assertGreater(record.work_in, 0.0)
        self.assertLess(abs(record.energy_error), 1e-5 * record.work_in)
        self.assertLess(abs(plant.state.q_e[0]), 1e-3)


class TestRingDown(unittest.TestCase):
    """Tests for flexible_link_ring_down."""

    def test_first_mode_frequency(self):
        """Test a first-mode release oscillates at the first natural frequency."""
        params = reference_params()
        basis = ModalBasis.create("CF", params.l1, 3)
        omega, f = natural_frequencies(basis, params.EI, params.rho)
        t, history = flexible_link_ring_down(params, basis, [1e-3, 0.0, 0.0], duration=0.3, dt=1e-4)
        np.testing.assert_allclose(history[:, 0], 1e-3 * np.cos(omega[0] * t), atol=1e-8)
        np.testing.assert_allclose(history[:, 1:], 0.0, atol=1e-8)
        self.assertAlmostEqual(f[0], 11.36, delta=0.05)

    def test_damped_decay(self):
        """Test the damped envelope decays at zeta times omega."""
        params = reference_params()
        basis = ModalBasis.create("CF", params.l1, 2)
        omega, _ = natural_frequencies(basis, params.EI, params.rho)
        zeta = 0.02
        t, history = flexible_link_ring_down(params, basis, [1e-3, 0.0], duration=1.0, dt=1e-4, damping_ratio=zeta)
        period = int(round(2 * math.pi / omega[0] / 1e-4))
        late = np.max(np.abs(history[-period:, 0]))
        expected = 1e-3 * math.exp(-zeta * omega[0] * t[-period])
        self.assertGreater(late / expected, 0.85)
        self.assertLess(late / expected, 1.01)

    def test_clamped_platform_frequencies(self):
        """Test the held-platform frequencies come per link in ascending order."""
        params = reference_params()
        basis = ModalBasis.create("CF", params.l1, 2)
        frequencies = clamped_platform_frequencies(params, basis)
        self.assertEqual(frequencies.shape, (3, 2))
        self.assertTrue(np.all(frequencies > 0.0))
        self.assertTrue(np.all(np.diff(frequencies, axis=1) > 0.0))
        self.assertEqual(clamped_platform_frequencies(params, ModalBasis.create("CF", params.l1, 0)).shape, (3, 0))

    def test_plant_ring_down_frequency(self):
        """Test the plant with the platform held rings at the held-platform frequency within 2%."""
        params = reference_params()
        config = PlantConfig(n_modes=1, dt=2e-4)
        expected = clamped_platform_frequencies(params, config.make_basis(params))[0, 0]
        t, history = plant_ring_down(params, config, [1e-3, 0.0, 0.0], duration=0.6)
        self.assertEqual(history.shape, (t.size, 3))
        self.assertAlmostEqual(history[0, 0], 1e-3)
        measured = dominant_frequency(t, history[:, 0])
        self.assertAlmostEqual(measured / expected, 1.0, delta=0.02)


@unittest.skipUnless(SLOW, "set FLEXPM_SLOW_TESTS=1 to run the long plant runs")
class TestPlantLongRuns(unittest.TestCase):
    """Long plant runs at the default step."""

    def setUp(self):
        self.params = reference_params()

    def test_random_state_energy_conservation(self):
        """Test one second of free motion from a random state keeps T + V within 1e-6."""
        rng = np.random.default_rng(7)
        config = PlantConfig(n_modes=3, dt=1e-4)
        basis = config.make_basis(self.params)
        tip = float(basis.tip_values()[0])
        q_f = np.zeros((3, 3))
        q_f[:, 0] = rng.uniform(-2e-3, 2e-3, size=3) / tip
        q_f_dot = np.zeros((3, 3))
        q_f_dot[:, 0] = rng.uniform(-0.05, 0.05, size=3) / tip
        q_e = np.array([*rng.uniform(-0.02, 0.02, size=2), rng.uniform(-0.05, 0.05)])
        q_e_dot = np.array([*rng.uniform(-0.01, 0.01, size=2), rng.uniform(-0.02, 0.02)])
        state = GeneralizedState(q_e, q_f.reshape(-1), q_e_dot, q_f_dot.reshape(-1))
        plant = Plant(self.params, config, state)
        initial = plant.plant_state.energy
        plant.advance(np.zeros(3), 1.0)
        self.assertAlmostEqual(plant.t, 1.0, places=9)
        self.assertLess(abs(plant.energy_state().energy - initial) / initial, 1e-6)

    def test_step_rate(self):
        """Test the default plant with joint readings at 1 kHz runs a simulated second in under 15 s."""
        config = PlantConfig()
        plant = Plant.at_pose(self.params, config, PlatformPose(), q_f=[1e-3, 0.0, 0.0] + [0.0] * 12)
        tau = np.array([0.05, -0.02, 0.01])
        steps = 1000
        start = time.perf_counter()
        for k in range(steps):
            if k % 10 == 0:
                plant.joint_angles()
                plant.tip_deflections()
            plant.step(tau)
        elapsed = time.perf_counter() - start
        self.assertLess(elapsed / (steps * config.dt), 15.0)



if __name__ == "__main__":
    unittest.main()
