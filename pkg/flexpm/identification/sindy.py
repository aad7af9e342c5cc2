"""Sparse selection of a beam mode shape from a candidate library."""

import logging
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import Lasso, lasso_path
from sklearn.model_selection import LeaveOneOut

from flexpm.core.modal_basis import BoundaryCondition, ModalBasis
from flexpm.errors import AmbiguityError, NoFitError, ValidationError

logger = logging.getLogger(__name__)

LASSO_TOLERANCE = 1e-10
LASSO_MAX_ITER = 200000
NO_FIT_RESIDUAL = 0.5
DUPLICATE_COSINE = 1.0 - 1e-9


@dataclass(frozen=True, eq=False)
class CandidateLibrary:
    """Candidate mode shapes sampled at the snapshot abscissae.

    Attributes:
        Theta: Matrix of shape ``(points, p)``; every column has max-abs 1.
        labels: ``(boundary condition, order)`` of each column.
        sample_points: Abscissae (m).
    """

    Theta: np.ndarray
    labels: List[Tuple[BoundaryCondition, int]]
    sample_points: np.ndarray

    @property
    def names(self) -> List[str]:
        return [f"{bc.value}{order}" for bc, order in self.labels]


def build_library(
    families: Sequence[Union[str, BoundaryCondition]], sample_points, length: Optional[float] = None, orders: int = 3
) -> CandidateLibrary:
    """Sample the first ``orders`` mode shapes of each family.

    Parameters:
        families: Boundary-condition families.
        sample_points: Abscissae within ``[0, length]`` (m).
        length: Beam length; the last sample point if None.
        orders: Mode orders per family.

    Returns:
        CandidateLibrary: ``len(families) * orders`` normalized columns.

    Raises:
        ValidationError: If two columns coincide up to sign.
    """
    points = np.asarray(sample_points, dtype=float)
    length = float(points[-1]) if length is None else length
    columns, labels = [], []
    for family in families:
        bc = BoundaryCondition.parse(family)
        shapes = ModalBasis.create(bc, length, orders).phi_matrix(points)
        for j in range(orders):
            column = shapes[:, j]
            columns.append(column / np.max(np.abs(column)))
            labels.append((bc, j + 1))
    Theta = np.column_stack(columns)
    unit_columns = Theta / np.linalg.norm(Theta, axis=0)
    cosines = np.abs(unit_columns.T @ unit_columns)
    np.fill_diagonal(cosines, 0.0)
    if np.any(cosines >= DUPLICATE_COSINE):
        first, second = np.unravel_index(np.argmax(cosines), cosines.shape)
        raise ValidationError("DuplicateColumn", "Library columns coincide", f"{labels[first]} and {labels[second]}")
    return CandidateLibrary(Theta=Theta, labels=labels, sample_points=points)


@dataclass(frozen=True, eq=False)
class SindyResult:
    """Sparse coefficients of the extracted shape over the library.

    Attributes:
        Xi: Coefficient per library column.
        lam: LASSO weight used.
        active_set: Names of columns whose coefficient is at least ``threshold * max|Xi|``.
        residual: ``||omega - Theta Xi|| / ||omega||``.
        library: The library regressed on.
        omega: Target shape after max-abs normalization.
        lambda_grid: Swept weights, empty when the weight was given.
        cv_errors: Mean leave-one-out squared error per swept weight.
        path_residuals: Full-data relative residual per swept weight.
    """

    Xi: np.ndarray
    lam: float
    active_set: List[str]
    residual: float
    library: CandidateLibrary
    omega: np.ndarray
    lambda_grid: np.ndarray
    cv_errors: np.ndarray
    path_residuals: np.ndarray

    @property
    def reconstruction(self) -> np.ndarray:
        return self.library.Theta @ self.Xi

    @property
    def dominance_ratio(self) -> float:
        """Largest coefficient magnitude over the runner-up."""
        magnitudes = np.sort(np.abs(self.Xi))[::-1]
        if magnitudes.size < 2 or magnitudes[1] == 0:
            return float("inf")
        return float(magnitudes[0] / magnitudes[1])

    def coefficient_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"label": self.library.names, "coefficient": self.Xi, "active": np.isin(self.library.names, self.active_set)})


def lambda_grid(Theta: np.ndarray, omega: np.ndarray, count: int = 30) -> np.ndarray:
    """Log grid over ``[1e-6, 1] * lambda_max``, largest first.

    ``lambda_max = max|Theta^T omega| / points`` is the smallest weight zeroing every coefficient.
    """
    lambda_max = float(np.max(np.abs(Theta.T @ omega))) / Theta.shape[0]
    return lambda_max * np.logspace(0.0, -6.0, count)


def _fit(Theta, omega, lam):
    model = Lasso(alpha=lam, fit_intercept=False, tol=LASSO_TOLERANCE, max_iter=LASSO_MAX_ITER, selection="cyclic")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model.fit(Theta, omega)
    return model.coef_.copy()


def _path(Theta, omega, grid):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        _, coefs, _ = lasso_path(Theta, omega, alphas=grid, tol=LASSO_TOLERANCE, max_iter=LASSO_MAX_ITER)
    return coefs


def _active(Xi: np.ndarray, names: List[str], threshold: float) -> List[str]:
    peak = np.max(np.abs(Xi)) if Xi.size else 0.0
    if peak == 0:
        return []
    return [name for name, value in zip(names, Xi) if abs(value) >= threshold * peak]


def sindy_select(
    omega_e,
    library: CandidateLibrary,
    lam: Optional[float] = None,
    lambda_count: int = 30,
    threshold: float = 0.05,
) -> SindyResult:
    """Regress a shape on the library with an L1 penalty.

    With ``lam`` given a single cyclic coordinate-descent fit is made. Otherwise the weight is swept
    over :func:`lambda_grid`; each weight is scored by leave-one-out squared error over the samples
    and the largest weight within one standard error of the best score is kept, so the sparsest
    adequate model wins.

    Parameters:
        omega_e: Extracted shape, one value per library row.
        library: Candidate library.
        lam: LASSO weight, or None for the sweep.
        lambda_count: Size of the swept grid.
        threshold: Relative magnitude below which a coefficient is inactive.

    Returns:
        SindyResult: Coefficients, active set and fit diagnostics.

    Raises:
        ValidationError: If the shape is zero or does not match the library rows.
        NoFitError: If no weight fits the shape to a relative residual below 0.5.
    """
    omega = np.asarray(omega_e, dtype=float).reshape(-1)
    Theta = library.Theta
    if omega.size != Theta.shape[0]:
        raise ValidationError("DimensionMismatch", "Shape and library rows differ", f"{omega.size} != {Theta.shape[0]}")
    peak = np.max(np.abs(omega))
    if peak == 0:
        raise ValidationError("ZeroShape", "Cannot select a mode for an all-zero shape")
    omega = omega / peak
    norm = np.linalg.norm(omega)
    if lam is not None:
        Xi = _fit(Theta, omega, lam)
        residual = float(np.linalg.norm(omega - Theta @ Xi) / norm)
        if residual >= NO_FIT_RESIDUAL:
            raise NoFitError("NoFit", "Library does not reproduce the shape", f"relative residual {residual:.3f} at lambda {lam:.3e}")
        empty = np.zeros(0)
        return SindyResult(Xi, float(lam), _active(Xi, library.names, threshold), residual, library, omega, empty, empty, empty)

    grid = lambda_grid(Theta, omega, lambda_count)
    coefs = _path(Theta, omega, grid)
    path_residuals = np.linalg.norm(omega[:, None] - Theta @ coefs, axis=0) / norm
    if np.min(path_residuals) >= NO_FIT_RESIDUAL:
        raise NoFitError("NoFit", "Library does not reproduce the shape", f"best relative residual {np.min(path_residuals):.3f}")
    squared = np.zeros((omega.size, grid.size))
    for fold, (train, test) in enumerate(LeaveOneOut().split(Theta)):
        fold_coefs = _path(Theta[train], omega[train], grid)
        squared[fold] = (omega[test] - Theta[test] @ fold_coefs).ravel() ** 2
    cv_errors = squared.mean(axis=0)
    standard_errors = squared.std(axis=0, ddof=1) / np.sqrt(omega.size)
    candidates = np.flatnonzero(path_residuals < NO_FIT_RESIDUAL)
    best = candidates[np.argmin(cv_errors[candidates])]
    bound = cv_errors[best] + standard_errors[best]
    # Grid runs from the largest weight down, so the first admissible index is the sparsest model.
    chosen = next(k for k in candidates if cv_errors[k] <= bound)
    Xi = coefs[:, chosen].copy()
    logger.debug(f"LASSO weight {grid[chosen]:.3e} chosen, leave-one-out error {cv_errors[chosen]:.3e}")
    return SindyResult(
        Xi=Xi,
        lam=float(grid[chosen]),
        active_set=_active(Xi, library.names, threshold),
        residual=float(path_residuals[chosen]),
        library=library,
        omega=omega,
        lambda_grid=grid,
        cv_errors=cv_errors,
        path_residuals=path_residuals,
    )


def select_mode_shape(sindy: SindyResult, ambiguity_ratio: float = 0.5) -> Tuple[BoundaryCondition, int]:
    """Label of the largest coefficient.

    Raises:
        ValidationError: If the active set is empty.
        AmbiguityError: If the runner-up reaches ``ambiguity_ratio`` of the top coefficient.
    """
    if not sindy.active_set:
        raise ValidationError("EmptyActiveSet", "No active library column to select")
    magnitudes = np.abs(sindy.Xi)
    order = np.argsort(-magnitudes, kind="stable")
    top, runner_up = order[0], order[1] if order.size > 1 else None
    names = sindy.library.names
    if runner_up is not None and magnitudes[runner_up] >= ambiguity_ratio * magnitudes[top]:
        raise AmbiguityError(
            "Ambiguous",
            "Top two library columns are too close to separate",
            f"{names[top]}={sindy.Xi[top]:.4g}, {names[runner_up]}={sindy.Xi[runner_up]:.4g}",
        )
    return sindy.library.labels[top]


def identification_report(dmd_result, sindy: SindyResult, selection: Optional[Tuple[BoundaryCondition, int]]) -> str:
    """Plain-text summary of one identification run."""
    lines = ["Mode-shape identification", "=" * 25]
    if selection is not None:
        bc, order = selection
        lines.append(f"Selected: {bc.long_name} order {order} ({bc.value}{order})")
    else:
        lines.append("Selected: none (ambiguous)")
    lines.append(f"LASSO weight: {sindy.lam:.4e}   relative residual: {sindy.residual:.4e}   dominance: {sindy.dominance_ratio:.3g}")
    lines.append("")
    lines.append("Coefficients:")
    for name, value in zip(sindy.library.names, sindy.Xi):
        marker = "*" if name in sindy.active_set else " "
        lines.append(f"  {marker} {name:<5} {value: .6f}")
    lines.append("")
    lines.append("Extracted vs identified shape:")
    for k, (target, fitted) in enumerate(zip(sindy.omega, sindy.reconstruction)):
        lines.append(f"  x{k + 1:<2} {target: .6f} {fitted: .6f}")
    if dmd_result is not None:
        lines.append("")
        lines.append(f"DMD rank {dmd_result.rank}, delays {dmd_result.delays}, residual {dmd_result.residual:.3e}")
        for k in range(min(6, dmd_result.eigenvalues.size)):
            lines.append(f"  mode {k + 1}: {dmd_result.frequencies[k]:9.4f} Hz  amplitude {dmd_result.amplitudes[k]:.4e}")
    return "\n".join(lines) + "\n"
