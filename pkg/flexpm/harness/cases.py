"""Controller comparison, model comparison and observer-rate sweep."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from flexpm.control.control_config import ControlLawConfig
from flexpm.core.kinematics import DEFAULT_KINEMATICS, KinematicsConfig
from flexpm.core.mechanism_config import MechanismParams
from flexpm.dynamics.plant import PlantConfig
from flexpm.errors import AcceptanceError
from flexpm.harness.episode import EpisodeResult, run_episode
from flexpm.harness.metrics import monotone_with_tolerance
from flexpm.harness.trajectory import DWELL, Trajectory
from flexpm.observer.network import ObserverConfig, ObserverNet

logger = logging.getLogger(__name__)

MAE_RATIO = 0.2
DEFORMATION_RATIO = 0.2
MODEL_RATIO = 0.3
STABLE_RATE = 200.0
SWEEP_RATES = (1000.0, 500.0, 200.0, 100.0, 50.0)


@dataclass
class CaseSetup:
    """Everything the episodes of a case share."""

    params: MechanismParams
    plant: PlantConfig
    control: ControlLawConfig
    baseline: ControlLawConfig
    trajectory: Trajectory
    observer: Optional[ObserverNet] = None
    observer_config: ObserverConfig = field(default_factory=ObserverConfig)
    seed: int = 0
    kinematics: KinematicsConfig = DEFAULT_KINEMATICS
    settle_offset: float = 0.5
    workers: int = 1


@dataclass
class CaseOutcome:
    """Episodes of a case, the named check values and whether each check passed."""

    results: List[EpisodeResult]
    values: Dict[str, float] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failed_checks(self) -> List[str]:
        return [name for name, ok in self.checks.items() if not ok]


def _run_job(job) -> EpisodeResult:
    setup, control, name = job
    return run_episode(
        setup.params,
        setup.plant,
        control,
        setup.trajectory,
        observer=setup.observer,
        observer_config=setup.observer_config,
        seed=setup.seed,
        kinematics=setup.kinematics,
        settle_offset=setup.settle_offset,
        name=name,
    )


def run_episodes(setup: CaseSetup, controls: Sequence[ControlLawConfig], names: Sequence[str]) -> List[EpisodeResult]:
    """Run one episode per controller config; in parallel when ``setup.workers > 1``. Order follows ``names``."""
    jobs = [(setup, control, name) for control, name in zip(controls, names)]
    if setup.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(setup.workers, len(jobs))) as pool:
            return list(pool.map(_run_job, jobs))
    return [_run_job(job) for job in jobs]


def dwell_decay(result: EpisodeResult, trajectory: Trajectory, settle_offset: float = 0.0, floor: float = 1e-8) -> bool:
    """True if the episode completed with finite V that ends every dwell no higher than it entered it."""
    if not result.completed or result.log.empty:
        return False
    t = result.log["t"].to_numpy()
    V = result.log["V"].to_numpy()
    if not np.all(np.isfinite(V)):
        return False
    for start, end in trajectory.windows(DWELL, settle_offset):
        inside = np.flatnonzero((t >= start) & (t < end))
        if inside.size < 2:
            continue
        if V[inside[-1]] > max(V[inside[0]], floor):
            return False
    return True


def _enforce(outcome: CaseOutcome, label: str, strict: bool) -> CaseOutcome:
    for name, ok in outcome.checks.items():
        logger.info(f"{label}: {name} {'passed' if ok else 'FAILED'}")
    if strict and not outcome.passed:
        detail = ", ".join(f"{name}" for name in outcome.failed_checks())
        raise AcceptanceError("CheckFailed", f"{label} did not meet its acceptance criteria", detail)
    return outcome


def _dwell_position_mae(result: EpisodeResult) -> float:
    return result.metrics.position_mae.get(DWELL, float("nan"))


def run_case(setup: CaseSetup, strict: bool = True) -> CaseOutcome:
    """Proposed computed-torque controller against the joint PD baseline on the same plant.

    Checks: dwell position MAE and dwell deformation RMS of the proposed controller at most 0.2 of
    the baseline's; proposed total actuator energy not above the baseline's.

    Raises:
        AcceptanceError: If ``strict`` and a check fails.
    """
    proposed, baseline = run_episodes(setup, [setup.control, setup.baseline], ["proposed", "joint_pd"])
    values = {
        "proposed_mae": _dwell_position_mae(proposed),
        "baseline_mae": _dwell_position_mae(baseline),
        "proposed_deformation_rms": float(np.max(proposed.metrics.deformation_rms)),
        "baseline_deformation_rms": float(np.max(baseline.metrics.deformation_rms)),
        "proposed_energy": proposed.metrics.energy_total,
        "baseline_energy": baseline.metrics.energy_total,
    }
    checks = {
        "completed": proposed.completed and baseline.completed,
        "mae_ratio": values["proposed_mae"] <= MAE_RATIO * values["baseline_mae"],
        "deformation_ratio": values["proposed_deformation_rms"] <= DEFORMATION_RATIO * values["baseline_deformation_rms"],
        "energy": values["proposed_energy"] <= values["baseline_energy"],
    }
    return _enforce(CaseOutcome([proposed, baseline], values, checks), "run-case", strict)


def compare_models(setup: CaseSetup, models: Sequence[str] = ("developed", "rigid", "clamped_pinned"), strict: bool = True) -> CaseOutcome:
    """The computed-torque controller with each compensation model against the same truth plant.

    Check: the developed model's dwell deformation RMS is at most 0.3 of every other model's.

    Raises:
        AcceptanceError: If ``strict`` and a check fails.
    """
    controls = [replace(setup.control, compensation_model=model) for model in models]
    results = run_episodes(setup, controls, list(models))
    values = {}
    for model, result in zip(models, results):
        values[f"{model}_mae"] = _dwell_position_mae(result)
        values[f"{model}_deformation_rms"] = float(np.max(result.metrics.deformation_rms))
    checks = {"completed": all(r.completed for r in results)}
    if "developed" in models:
        reference = values["developed_deformation_rms"]
        for model in models:
            if model != "developed":
                checks[f"developed_vs_{model}"] = reference <= MODEL_RATIO * values[f"{model}_deformation_rms"]
    return _enforce(CaseOutcome(results, values, checks), "compare-models", strict)


def sweep_observer_rate(setup: CaseSetup, rates: Sequence[float] = SWEEP_RATES, strict: bool = True) -> CaseOutcome:
    """The computed-torque controller with the observer sampled at each of ``rates`` (descending).

    Checks: every episode completed; dwell position MAE non-decreasing as the rate drops, allowing
    one inversion of at most 5%; bounded, dwell-decaying V at every rate of at least 200 Hz.

    Raises:
        AcceptanceError: If ``strict`` and a check fails.
    """
    rates = sorted((float(r) for r in rates), reverse=True)
    controls = [replace(setup.control, observer_rate=rate) for rate in rates]
    results = run_episodes(setup, controls, [f"observer_{rate:g}hz" for rate in rates])
    maes = [_dwell_position_mae(r) for r in results]
    values = {f"mae_{rate:g}hz": mae for rate, mae in zip(rates, maes)}
    # A truncated episode has no comparable MAE.
    ranked = [mae if r.completed else float("nan") for mae, r in zip(maes, results)]
    checks = {"completed": all(r.completed for r in results), "monotone": monotone_with_tolerance(ranked)}
    for rate, result in zip(rates, results):
        if rate >= STABLE_RATE:
            checks[f"stable_{rate:g}hz"] = dwell_decay(result, setup.trajectory, setup.settle_offset)
    return _enforce(CaseOutcome(results, values, checks), "sweep-observer-rate", strict)
