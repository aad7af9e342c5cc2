#!/usr/bin/env python3
"""
Command-line interface of flexpm.

Subcommands:
- simulate: open-loop run of the truth plant with constant joint torques
- identify: excitation maneuver, DMD and sparse regression of the link mode shape
- gen-data / train-observer / eval-observer: pose observer data, training and evaluation
- run-case: proposed controller against the joint PD baseline
- compare-models: proposed controller with each compensation model
- sweep-observer-rate: proposed controller at decreasing observer rates
- ik: inverse kinematics of one pose

Logging Options:
- Default: WARNING level logs go to stderr (quiet unless there are issues)
- --verbose or --log-level INFO: Show informational messages about progress
- --log-level DEBUG: Show detailed debugging information
- --log-file FILE: Save logs to a file instead of/in addition to stderr
- --log-quiet: When using --log-file, suppress stderr output (file only)

Exit codes: 0 success, 1 configuration or validation error, 2 numerical error (including
an episode stopped by the plant), 3 failed acceptance check.

Examples:
    # Identify the mode shape of link 1 and write the report to ./out
    flexpm identify --out ./out -v

    # Train an observer on 10000 rows and evaluate it
    flexpm train-observer --out ./out
    flexpm eval-observer --out ./out --model ./out/observer_model.json

    # Controller comparison with a configuration file
    flexpm run-case --config case.json --out ./out

    # Joint angles of a deflected pose
    flexpm ik --pose 0.05 0.02 0.0 --tip-deflection 0.01 0 0
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from flexpm import __version__
from flexpm.config import SimulationConfig
from flexpm.core.kinematics import inverse_kinematics, loop_closure_residual
from flexpm.core.mechanism_config import PlatformPose
from flexpm.dynamics.plant import Plant
from flexpm.errors import FlexPMError, NumericalError, ReportError
from flexpm.harness.cases import CaseSetup, compare_models, run_case, sweep_observer_rate
from flexpm.harness.report import emit_report
from flexpm.harness.trajectory import build_trajectory
from flexpm.identification.pipeline import identify_mode_shape
from flexpm.identification.snapshots import collect_snapshots, read_snapshot_csv, write_snapshot_csv
from flexpm.observer.network import ObserverNet, benchmark_predictions, evaluate_observer, train
from flexpm.observer.training_data import ObserverRanges, TrainingSet, deflection_modes, generate_training_set

TRAIN_FILE = "observer_train.csv"
TEST_FILE = "observer_test.csv"
MODEL_FILE = "observer_model.json"


def _add_common(parser):
    parser.add_argument("-c", "--config", dest="config", default=None, help="JSON configuration file. Default: built-in defaults")
    parser.add_argument("-s", "--seed", type=int, default=None, help="Seed overriding the configured seeds.")
    parser.add_argument("-o", "--out", dest="out", default=".", help="Output directory. Default: current directory")
    parser.add_argument(
        "-l",
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="WARNING",
        help="Log level (case insensitive). Default: WARNING",
    )
    parser.add_argument(
        "-lf",
        "--log-file",
        dest="log_file",
        default=None,
        help="Full path to save log output to file. If not specified, logs go to stderr.",
    )
    parser.add_argument(
        "-lq",
        "--log-quiet",
        action="store_true",
        dest="log_quiet",
        help="If present, suppress log output to stderr (only applies if --log-file is used).",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="If present, output informative messages as computation progresses (equivalent to --log-level INFO).",
    )


def get_parser():
    """Create the argument parser for flexpm.

    Returns:
        argparse.ArgumentParser: Configured argument parser.
    """
    parser = argparse.ArgumentParser(
        prog="flexpm",
        description="Simulate, identify, observe and control a 3-RRR parallel manipulator with flexible links.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Open-loop plant run with constant torques.")
    simulate.add_argument("--duration", type=float, default=None, help="Simulated time (s). Default: harness.simulate_duration")
    simulate.add_argument("--torque", type=float, nargs=3, default=None, help="Joint torques (N m).")
    simulate.add_argument("--tip-deflection", type=float, default=None, help="Initial tip deflection of every link (m).")
    _add_common(simulate)

    identify = subparsers.add_parser("identify", help="Identify the actuation-link mode shape.")
    identify.add_argument("--snapshots", default=None, help="Snapshot CSV to analyze instead of running the maneuver.")
    identify.add_argument("--no-strict", action="store_false", dest="strict", help="Report an ambiguous selection instead of failing.")
    _add_common(identify)

    gen_data = subparsers.add_parser("gen-data", help="Generate observer training and test data.")
    gen_data.add_argument("--train-count", type=int, default=None, help="Training rows. Default: observer.train_count")
    gen_data.add_argument("--test-count", type=int, default=None, help="Test rows. Default: observer.test_count")
    _add_common(gen_data)

    train_parser = subparsers.add_parser("train-observer", help="Train the pose observer.")
    train_parser.add_argument("--data", default=None, help="Training CSV; generated when missing.")
    train_parser.add_argument("--epochs", type=int, default=None, help="Epochs. Default: observer.epochs")
    _add_common(train_parser)

    evaluate = subparsers.add_parser("eval-observer", help="Evaluate a trained observer on test data.")
    evaluate.add_argument("--model", default=None, help=f"Observer model file. Default: <out>/{MODEL_FILE}")
    evaluate.add_argument("--data", default=None, help="Test CSV; generated when missing.")
    evaluate.add_argument("--bench-count", type=int, default=10000, help="Predictions timed one at a time. Default: 10000")
    _add_common(evaluate)

    for name, text in (
        ("run-case", "Proposed controller against the joint PD baseline."),
        ("compare-models", "Proposed controller with each compensation model."),
        ("sweep-observer-rate", "Proposed controller at decreasing observer rates."),
    ):
        case = subparsers.add_parser(name, help=text)
        case.add_argument("--model", default=None, help="Observer model file. Default: harness.observer_model or train one")
        case.add_argument("--no-strict", action="store_false", dest="strict", default=None, help="Report failed checks without failing.")
        _add_common(case)

    ik = subparsers.add_parser("ik", help="Inverse kinematics of one pose.")
    ik.add_argument("--pose", type=float, nargs=3, required=True, metavar=("X", "Y", "THETA"), help="Platform pose (m, m, rad).")
    ik.add_argument("--tip-deflection", type=float, nargs=3, default=[0.0, 0.0, 0.0], help="Tip deflections, first mode (m).")
    _add_common(ik)
    return parser


def setup_logging(args):
    """Configure logging based on command line arguments.

    Parameters:
        args (argparse.Namespace): Parsed command line arguments.

    Returns:
        logging.Logger: Configured logger instance.
    """
    log_level = args.log_level.upper() if args.log_level else "WARNING"
    if args.verbose:
        log_level = "INFO"

    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
    root_logger.setLevel(getattr(logging, log_level))
    formatter = logging.Formatter(log_format, datefmt=date_format)

    if args.log_file:
        file_handler = logging.FileHandler(args.log_file, mode="w")
        file_handler.setLevel(getattr(logging, log_level))
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    if not args.log_quiet or not args.log_file:
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(getattr(logging, log_level))
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)

    logger = logging.getLogger("flexpm")
    logger.info(f"Starting flexpm {args.command} with log level: {log_level}")
    if args.log_file:
        logger.info(f"Logging to file: {args.log_file}")
    return logger


def load_config(args) -> SimulationConfig:
    """Configuration file with the command-line seed applied."""
    config = SimulationConfig.load(args.config)
    if args.seed is not None:
        config.observer.seed = args.seed
    return config


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
    except OSError as ex:
        raise ReportError("WriteFailed", "Could not write result file", str(path)) from ex
    return path


def _write_text(text: str, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as ex:
        raise ReportError("WriteFailed", "Could not write result file", str(path)) from ex
    return path


def _observer_sets(config: SimulationConfig, train_count=None, test_count=None):
    params = config.params()
    basis = config.plant.make_basis(params)
    ranges = ObserverRanges.from_dict(config.observer.ranges)
    observer = config.observer
    train_count = observer.train_count if train_count is None else train_count
    test_count = observer.test_count if test_count is None else test_count
    train_set = generate_training_set(
        params, basis, ranges, train_count, observer.seed, observer.workers, observer.chunk_size, config.kinematics
    )
    # The test stream is an independent child of the same seed.
    test_seed = int(np.random.SeedSequence(observer.seed).generate_state(1)[0])
    test_set = generate_training_set(
        params, basis, ranges, test_count, test_seed, observer.workers, observer.chunk_size, config.kinematics
    )
    return train_set, test_set


def _train_observer(config: SimulationConfig, train_set: TrainingSet, logger):
    net, history = train(ObserverNet.for_observer(config.observer), train_set.inputs, train_set.targets, config.observer)
    logger.info(f"Observer trained in {history.seconds:.1f} s, best held-out loss {history.best_loss:.3e} at epoch {history.best_epoch}")
    return net, history


def _load_or_train_observer(config: SimulationConfig, model_path, out_dir: Path, logger):
    if config.control.feedback == "truth":
        return None
    path = model_path or config.harness.observer_model
    if path:
        logger.info(f"Loading observer from {path}")
        return ObserverNet.load(path)
    logger.info("No observer model given, training one")
    train_set, _ = _observer_sets(config, test_count=0)
    net, _ = _train_observer(config, train_set, logger)
    net.save(out_dir / MODEL_FILE)
    return net


def command_simulate(args, config: SimulationConfig, out_dir: Path, logger) -> int:
    params = config.params()
    harness = config.harness
    duration = harness.simulate_duration if args.duration is None else args.duration
    torque = np.asarray(harness.simulate_torque if args.torque is None else args.torque, dtype=float)
    deflection = harness.simulate_tip_deflection if args.tip_deflection is None else args.tip_deflection
    basis = config.plant.make_basis(params)
    q_f = deflection_modes(basis, [deflection] * 3) if basis.n and deflection else None
    start = PlatformPose.from_array(build_trajectory(config.trajectory).start_pose)
    plant = Plant.at_pose(params, config.plant, start, q_f, config.kinematics)
    stride = max(1, int(round(1e-3 / config.plant.dt)))
    columns = ["t", "x", "y", "theta", "w1", "w2", "w3", *[f"qf{i}_{j}" for i in range(1, 4) for j in range(1, basis.n + 1)], "energy", "energy_error"]
    rows = []
    status = 0
    steps = int(round(duration / config.plant.dt))
    for k in range(steps + 1):
        try:
            if k % stride == 0:
                record = plant.energy_state()
                rows.append([plant.t, *plant.state.q_e, *plant.tip_deflections(), *plant.state.q_f, record.energy, record.energy_error])
            if k == steps:
                break
            plant.step(torque)
        except NumericalError as ex:
            logger.error(f"Plant run stopped at t={plant.t:.4f} s: {ex}")
            status = ex.exit_code
            break
    path = _write_frame(pd.DataFrame(rows, columns=columns), out_dir / "simulate.csv")
    logger.info(f"Wrote {len(rows)} samples to {path}")
    return status


def command_identify(args, config: SimulationConfig, out_dir: Path, logger) -> int:
    params = config.params()
    identification = config.identification
    if args.snapshots:
        snapshots = read_snapshot_csv(args.snapshots, params.l1)
    else:
        snapshots = collect_snapshots(params, config.plant, identification, config.kinematics)
        write_snapshot_csv(snapshots, out_dir / "snapshots.csv")
    result = identify_mode_shape(snapshots, identification, params.l1, strict=args.strict)
    _write_frame(result.dmd.to_frame(), out_dir / "dmd_modes.csv")
    _write_frame(result.sindy.coefficient_frame(), out_dir / "sindy_coefficients.csv")
    shapes = pd.DataFrame(
        {"x": snapshots.sample_points, "omega": result.sindy.omega, "reconstruction": result.sindy.reconstruction}
    )
    _write_frame(shapes, out_dir / "identified_shape.csv")
    report = result.report()
    _write_text(report, out_dir / "identification_report.txt")
    print(report)
    return 0


def command_gen_data(args, config: SimulationConfig, out_dir: Path, logger) -> int:
    train_set, test_set = _observer_sets(config, args.train_count, args.test_count)
    train_set.save(out_dir / TRAIN_FILE)
    test_set.save(out_dir / TEST_FILE)
    logger.info(f"Wrote {len(train_set)} training and {len(test_set)} test rows to {out_dir}")
    return 0


def command_train_observer(args, config: SimulationConfig, out_dir: Path, logger) -> int:
    if args.epochs is not None:
        config.observer.epochs = args.epochs
    if args.data:
        train_set = TrainingSet.load(args.data)
    else:
        train_set, test_set = _observer_sets(config)
        train_set.save(out_dir / TRAIN_FILE)
        test_set.save(out_dir / TEST_FILE)
    net, history = _train_observer(config, train_set, logger)
    net.save(out_dir / MODEL_FILE)
    losses = pd.DataFrame(
        {
            "epoch": np.arange(1, len(history.train_loss) + 1),
            "train_loss": history.train_loss,
            "validation_loss": history.validation_loss or [np.nan] * len(history.train_loss),
        }
    )
    _write_frame(losses, out_dir / "training_history.csv")
    return 0


def command_eval_observer(args, config: SimulationConfig, out_dir: Path, logger) -> int:
    net = ObserverNet.load(args.model or out_dir / MODEL_FILE)
    if args.data:
        test_set = TrainingSet.load(args.data)
    else:
        _, test_set = _observer_sets(config, train_count=0)
    evaluation = evaluate_observer(net, test_set.inputs, test_set.targets)
    seconds = benchmark_predictions(net, test_set.inputs, args.bench_count)
    frame = evaluation.to_frame()
    _write_frame(frame, out_dir / "observer_eval.csv")
    print(frame.to_string(index=False))
    print(f"normalized_mse {evaluation.normalized_mse:.3e}")
    print(f"{args.bench_count} predictions in {seconds:.3f} s")
    return 0


def _case_setup(args, config: SimulationConfig, out_dir: Path, logger) -> CaseSetup:
    params = config.params()
    return CaseSetup(
        params=params,
        plant=config.plant,
        control=config.control,
        baseline=config.baseline,
        trajectory=build_trajectory(config.trajectory, params, config.kinematics),
        observer=_load_or_train_observer(config, args.model, out_dir, logger),
        observer_config=config.observer,
        seed=config.observer.seed,
        kinematics=config.kinematics,
        settle_offset=config.harness.settle_offset,
        workers=config.harness.workers,
    )


def command_case(args, config: SimulationConfig, out_dir: Path, logger) -> int:
    setup = _case_setup(args, config, out_dir, logger)
    strict = config.harness.strict if args.strict is None else args.strict
    if args.command == "sweep-observer-rate":
        outcome = sweep_observer_rate(setup, config.harness.sweep_rates, strict=False)
    elif args.command == "compare-models":
        outcome = compare_models(setup, strict=False)
    else:
        outcome = run_case(setup, strict=False)
    harness = config.harness
    emit_report(
        outcome.results,
        out_dir,
        basis=config.plant.make_basis(setup.params),
        profile_window=tuple(harness.profile_window),
        profile_points=harness.profile_points,
        profile_stride=harness.profile_stride,
    )
    checks = pd.DataFrame(
        [{"check": name, "passed": ok} for name, ok in outcome.checks.items()]
        + [{"check": name, "value": value} for name, value in outcome.values.items()],
        columns=["check", "passed", "value"],
    )
    _write_frame(checks, out_dir / "checks.csv")
    plant_failures = [result.name for result in outcome.results if result.failure is not None and result.failure["stage"] == "plant"]
    if plant_failures:
        logger.error(f"{args.command}: the plant stopped in {', '.join(plant_failures)}")
        return NumericalError.exit_code
    if strict and not outcome.passed:
        logger.error(f"{args.command} failed checks: {', '.join(outcome.failed_checks())}")
        return 3
    return 0


def command_ik(args, config: SimulationConfig, out_dir: Path, logger) -> int:
    params = config.params()
    basis = config.plant.make_basis(params)
    pose = PlatformPose.from_array(args.pose)
    q_f = deflection_modes(basis, args.tip_deflection) if basis.n else None
    solution = inverse_kinematics(params, basis, pose, q_f, config.kinematics)
    frame = pd.DataFrame(
        {
            "branch": [1, 2, 3],
            "q_a": solution.q_a,
            "q_p": solution.q_p,
            "tip_deflection": solution.tip_deflection,
            "beta1": solution.beta1,
        }
    )
    residual = loop_closure_residual(params, basis, pose, q_f, solution)
    _write_frame(frame, out_dir / "ik.csv")
    print(frame.to_string(index=False))
    print(f"loop closure residual {residual:.3e} m")
    return 0


HANDLERS = {
    "simulate": command_simulate,
    "identify": command_identify,
    "gen-data": command_gen_data,
    "train-observer": command_train_observer,
    "eval-observer": command_eval_observer,
    "run-case": command_case,
    "compare-models": command_case,
    "sweep-observer-rate": command_case,
    "ik": command_ik,
}


def main(arg_list=None):
    """Main entry point for the command line.

    Parameters:
        arg_list (list, None): Optional list of command line arguments for testing.
                              If None, uses sys.argv.

    Returns:
        int: Exit code (0 success, 1 validation, 2 numerical, 3 acceptance).
    """
    parser = get_parser()
    args = parser.parse_args(arg_list)
    logger = setup_logging(args)
    try:
        config = load_config(args)
        out_dir = Path(args.out)
        status = HANDLERS[args.command](args, config, out_dir, logger)
        if status == 0:
            logger.info(f"{args.command} completed successfully.")
        return status
    except FlexPMError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
