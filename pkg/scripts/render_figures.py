#!/usr/bin/env python3
"""
Render the CSV files written by a flexpm case run as PNG figures.

Reads tracking.csv, tip_deflection.csv, deformation_profile.csv, torque.csv,
torque_summary.csv, window_mae.csv and deformation_rms.csv from a report directory and
writes one PNG per file that exists and is not empty.

Examples:
    # Render the figures of a run-case report next to the CSV files
    render_figures ./out

    # Render into a separate directory
    render_figures ./out --output-dir ./figures -v
"""

import argparse
import logging
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def get_parser():
    """Create the argument parser for render_figures.

    Returns:
        argparse.ArgumentParser: Configured argument parser.
    """
    parser = argparse.ArgumentParser(
        description="Render flexpm report CSV files as figures.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    parser.add_argument("report_dir", help="Directory holding the report CSV files.")
    parser.add_argument("-o", "--output-dir", dest="output_dir", default=None, help="Directory for PNG files. Default: report_dir")
    parser.add_argument("--dpi", type=int, default=150, help="Resolution of the PNG files. Default: 150")
    parser.add_argument(
        "-l",
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="WARNING",
        help="Log level (case insensitive). Default: WARNING",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="If present, output informative messages as computation progresses (equivalent to --log-level INFO).",
    )
    return parser


def setup_logging(args):
    log_level = "INFO" if args.verbose else args.log_level.upper()
    logging.basicConfig(
        level=getattr(logging, log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        force=True,
    )
    return logging.getLogger("render_figures")


def _per_case(frame: pd.DataFrame, columns, ylabel: str, title: str):
    fig, axes = plt.subplots(len(columns), 1, sharex=True, figsize=(8, 2.2 * len(columns)))
    axes = axes if len(columns) > 1 else [axes]
    for axis, column in zip(axes, columns):
        for case, group in frame.groupby("case", sort=False):
            axis.plot(group["t"], group[column], label=case, linewidth=0.8)
        axis.set_ylabel(f"{column} {ylabel}")
        axis.grid(True, alpha=0.3)
    axes[0].set_title(title)
    axes[0].legend(loc="upper right", fontsize="small")
    axes[-1].set_xlabel("t (s)")
    fig.tight_layout()
    return fig


def render_tracking(frame):
    return _per_case(frame, ["e_x", "e_y", "e_theta"], "", "Tracking error")


def render_deformation(frame):
    return _per_case(frame, ["w1", "w2", "w3"], "(m)", "Tip deflection")


def render_torque(frame):
    return _per_case(frame, ["tau1", "tau2", "tau3"], "(N m)", "Joint torque")


def render_profile(frame):
    fig, axis = plt.subplots(figsize=(8, 4))
    for case, group in frame.groupby("case", sort=False):
        for k, (_, snapshot) in enumerate(group.groupby("t")):
            axis.plot(snapshot["x_link"], snapshot["w"], linewidth=0.5, alpha=0.6, label=case if k == 0 else None)
    axis.set_xlabel("x along link 1 (m)")
    axis.set_ylabel("deflection (m)")
    axis.set_title("Link 1 deflection profile")
    axis.legend(fontsize="small")
    fig.tight_layout()
    return fig


def _bars(frame, index: str, columns, title: str):
    fig, axes = plt.subplots(1, len(columns), figsize=(4 * len(columns), 3.5))
    axes = axes if len(columns) > 1 else [axes]
    for axis, column in zip(axes, columns):
        frame.pivot_table(index=index, columns="case", values=column, sort=False).plot.bar(ax=axis)
        axis.set_title(column)
        axis.grid(True, axis="y", alpha=0.3)
    fig.suptitle(title)
    fig.tight_layout()
    return fig


def render_torque_summary(frame):
    return _bars(frame, "joint", ["torque_peak", "energy"], "Torque peak and energy per joint")


def render_mae(frame):
    return _bars(frame, "window", ["mae_x", "mae_y", "mae_theta"], "Mean absolute tracking error")


def render_rms(frame):
    return _bars(frame, "link", ["deformation_rms"], "Dwell deflection RMS")


RENDERERS = {
    "tracking.csv": render_tracking,
    "tip_deflection.csv": render_deformation,
    "deformation_profile.csv": render_profile,
    "torque.csv": render_torque,
    "torque_summary.csv": render_torque_summary,
    "window_mae.csv": render_mae,
    "deformation_rms.csv": render_rms,
}


def main(arg_list=None):
    """Main entry point for the script.

    Parameters:
        arg_list (list, None): Optional list of command line arguments for testing.
                              If None, uses sys.argv.

    Returns:
        int: Exit code (0 for success, non-zero for failure).
    """
    args = get_parser().parse_args(arg_list)
    logger = setup_logging(args)
    report_dir = Path(args.report_dir)
    output_dir = Path(args.output_dir) if args.output_dir else report_dir
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        rendered = 0
        for name, render in RENDERERS.items():
            path = report_dir / name
            if not path.exists():
                logger.info(f"Skipping missing {path}")
                continue
            frame = pd.read_csv(path)
            if frame.empty:
                logger.info(f"Skipping empty {path}")
                continue
            fig = render(frame)
            target = output_dir / f"{path.stem}.png"
            fig.savefig(target, dpi=args.dpi)
            plt.close(fig)
            rendered += 1
            logger.info(f"Saved {target}")
        logger.info(f"Rendered {rendered} figures.")
        return 0
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
