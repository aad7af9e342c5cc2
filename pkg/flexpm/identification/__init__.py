"""Data-driven selection of the actuation-link mode shape."""

from .snapshots import (
    IdentificationConfig,
    SnapshotMatrix,
    collect_snapshots,
    read_snapshot_csv,
    synthetic_snapshots,
    write_snapshot_csv,
)
from .dmd import DmdResult, dmd
from .sindy import CandidateLibrary, SindyResult, build_library, select_mode_shape, sindy_select
from .pipeline import IdentificationResult, identify_mode_shape

__all__ = [
    "IdentificationConfig",
    "SnapshotMatrix",
    "collect_snapshots",
    "read_snapshot_csv",
    "synthetic_snapshots",
    "write_snapshot_csv",
    "DmdResult",
    "dmd",
    "CandidateLibrary",
    "SindyResult",
    "build_library",
    "select_mode_shape",
    "sindy_select",
    "IdentificationResult",
    "identify_mode_shape",
]
