"""Snapshots to selected mode shape."""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

from flexpm.core.modal_basis import BoundaryCondition
from flexpm.errors import AmbiguityError
from flexpm.identification.dmd import DmdResult, dmd
from flexpm.identification.sindy import (
    CandidateLibrary,
    SindyResult,
    build_library,
    identification_report,
    select_mode_shape,
    sindy_select,
)
from flexpm.identification.snapshots import IdentificationConfig, SnapshotMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IdentificationResult:
    """Everything produced by one identification run.

    Attributes:
        dmd: Decomposition of the snapshots.
        library: Candidate library.
        sindy: Sparse regression of the dominant shape.
        selection: Selected ``(boundary condition, order)``, or None when ambiguous.
        ambiguity: The ambiguity error when no selection was made.
    """

    dmd: DmdResult
    library: CandidateLibrary
    sindy: SindyResult
    selection: Optional[Tuple[BoundaryCondition, int]]
    ambiguity: Optional[AmbiguityError] = None

    def report(self) -> str:
        text = identification_report(self.dmd, self.sindy, self.selection)
        if self.ambiguity is not None:
            text += f"\nAmbiguity: {self.ambiguity}\n"
        return text


def identify_mode_shape(snapshots: SnapshotMatrix, config: IdentificationConfig, length: Optional[float] = None, strict: bool = True) -> IdentificationResult:
    """Extract the dominant shape by DMD and select its library label.

    Parameters:
        snapshots: Deformation snapshots.
        config: Identification settings.
        length: Link length; the last sample point if None.
        strict: Re-raise an ambiguity instead of recording it.

    Returns:
        IdentificationResult: The decomposition, regression and selection.

    Raises:
        AmbiguityError: If ``strict`` and the top two coefficients are too close.
    """
    decomposition = dmd(snapshots, rank=config.rank, delays=config.delays)
    library = build_library(config.families, snapshots.sample_points, length, config.library_orders)
    regression = sindy_select(decomposition.dominant_mode, library, config.lam, config.lambda_count, config.active_threshold)
    try:
        selection = select_mode_shape(regression, config.ambiguity_ratio)
    except AmbiguityError as ex:
        if strict:
            raise
        logger.warning(f"Mode selection is ambiguous: {ex}")
        return IdentificationResult(decomposition, library, regression, None, ex)
    bc, order = selection
    logger.info(f"Selected {bc.long_name} order {order}, dominance {regression.dominance_ratio:.3g}")
    return IdentificationResult(decomposition, library, regression, selection)
