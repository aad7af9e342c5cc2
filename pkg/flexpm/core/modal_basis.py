"""Euler-Bernoulli mode-shape families, modal deformation fields and beam integrals.

Every family is written as ``phi(s) = A cos s + B sin s + C cosh s + D sinh s`` with ``s = beta x``.
The hyperbolic pair is evaluated as ``(P/2) exp(s - z) + (Q/2) exp(-s)`` with ``z = beta l``,
``P = (C + D) exp(z)`` and ``Q = C - D``. The coefficients ``P`` are derived in closed form so that
high-order modes keep full precision.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize, special

from flexpm.errors import ConvergenceError, DomainError, ValidationError

logger = logging.getLogger(__name__)

TIP_SLOPE_WARNING = 0.3
ROOT_TOLERANCE = 1e-10


class BoundaryCondition(str, Enum):
    """Boundary-condition families of a uniform beam (root end first)."""

    CLAMPED_FREE = "CF"
    PINNED_PINNED = "PP"
    FREE_FREE = "FF"
    PINNED_FREE = "PF"
    CLAMPED_PINNED = "CP"
    CLAMPED_CLAMPED = "CC"

    @property
    def long_name(self) -> str:
        return _LONG_NAMES[self]

    @classmethod
    def parse(cls, value: Union[str, "BoundaryCondition"]) -> "BoundaryCondition":
        """Accept an enum member, a short code (``"CF"``) or a long name (``"ClampedFree"``).

        Raises:
            ValidationError: If the value names no family.
        """
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        for member in cls:
            if text.upper() == member.value or text.replace("-", "").replace("_", "").lower() == member.long_name.lower():
                return member
        raise ValidationError("BadBoundaryCondition", f"Unknown boundary condition '{value}'")


_LONG_NAMES = {
    BoundaryCondition.CLAMPED_FREE: "ClampedFree",
    BoundaryCondition.PINNED_PINNED: "PinnedPinned",
    BoundaryCondition.FREE_FREE: "FreeFree",
    BoundaryCondition.PINNED_FREE: "PinnedFree",
    BoundaryCondition.CLAMPED_PINNED: "ClampedPinned",
    BoundaryCondition.CLAMPED_CLAMPED: "ClampedClamped",
}

# Offset of the j-th root from j*pi, in units of pi.
_ROOT_OFFSET = {
    BoundaryCondition.CLAMPED_FREE: -0.5,
    BoundaryCondition.PINNED_PINNED: 0.0,
    BoundaryCondition.FREE_FREE: 0.5,
    BoundaryCondition.CLAMPED_CLAMPED: 0.5,
    BoundaryCondition.PINNED_FREE: 0.25,
    BoundaryCondition.CLAMPED_PINNED: 0.25,
}


def characteristic_function(bc: BoundaryCondition, z: float) -> float:
    """Characteristic equation of a family divided by ``cosh z``; zero at ``z = beta l``.

    Parameters:
        bc: Boundary-condition family.
        z: Dimensionless root candidate.

    Returns:
        float: Scaled residual. ClampedFree gives ``cos z + 1/cosh z``, i.e. ``cos z cosh z + 1 = 0``.
    """
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.CLAMPED_FREE:
        return math.cos(z) + 1.0 / math.cosh(z)
    if bc is BoundaryCondition.PINNED_PINNED:
        return math.sin(z)
    if bc in (BoundaryCondition.FREE_FREE, BoundaryCondition.CLAMPED_CLAMPED):
        return math.cos(z) - 1.0 / math.cosh(z)
    return math.sin(z) - math.cos(z) * math.tanh(z)


def _characteristic_derivative(bc: BoundaryCondition, z: float) -> float:
    sech = 1.0 / math.cosh(z)
    tanh = math.tanh(z)
    if bc is BoundaryCondition.CLAMPED_FREE:
        return -math.sin(z) - sech * tanh
    if bc is BoundaryCondition.PINNED_PINNED:
        return math.cos(z)
    if bc in (BoundaryCondition.FREE_FREE, BoundaryCondition.CLAMPED_CLAMPED):
        return -math.sin(z) + sech * tanh
    return math.cos(z) + math.sin(z) * tanh - math.cos(z) * sech**2


def _solve_root(bc: BoundaryCondition, j: int) -> float:
    centre = (j + _ROOT_OFFSET[bc]) * math.pi
    lower, upper = centre - 0.5 * math.pi, centre + 0.5 * math.pi
    f_lower, f_upper = characteristic_function(bc, lower), characteristic_function(bc, upper)
    if f_lower == 0.0:
        return lower
    if np.sign(f_lower) == np.sign(f_upper):
        raise ConvergenceError("RootBracket", f"No sign change for {bc.long_name} mode {j}", f"[{lower:.6f}, {upper:.6f}]")
    z = optimize.brentq(lambda s: characteristic_function(bc, s), lower, upper, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    # Newton polish; accept a step only if it lowers the residual.
    for _ in range(2):
        residual = characteristic_function(bc, z)
        slope = _characteristic_derivative(bc, z)
        if slope == 0.0:
            break
        candidate = z - residual / slope
        if abs(characteristic_function(bc, candidate)) >= abs(residual):
            break
        z = candidate
    if abs(characteristic_function(bc, z)) >= ROOT_TOLERANCE:
        raise ConvergenceError("RootResidual", f"Root of {bc.long_name} mode {j} did not converge", f"[{lower:.6f}, {upper:.6f}]")
    return z


def solve_characteristic_roots(bc: Union[str, BoundaryCondition], length: float, n: int) -> np.ndarray:
    """Wavenumbers beta_1..beta_n of a boundary-condition family.

    Each dimensionless root ``beta_j * length`` is bracketed around its asymptotic value and refined
    with Brent's method followed by a Newton polish.

    Parameters:
        bc: Boundary-condition family.
        length: Beam length (m).
        n: Number of roots.

    Returns:
        numpy.ndarray: Strictly increasing roots in 1/m.

    Raises:
        ValidationError: If ``length`` is not positive or ``n`` is negative.
        ConvergenceError: If a bracket has no sign change or the residual stays above 1e-10.
    """
    bc = BoundaryCondition.parse(bc)
    if length <= 0:
        raise ValidationError("BadLength", "Beam length must be positive", f"length={length}")
    if n < 0:
        raise ValidationError("BadOrder", "Truncation order must be non-negative", f"n={n}")
    return np.array([_solve_root(bc, j) for j in range(1, n + 1)]) / length


def _raw_coefficients(bc: BoundaryCondition, z: float) -> Tuple[float, float, float, float]:
    """(A, B, P, Q) of the unnormalized shape for root ``z``."""
    ez = math.exp(-z)
    sin_z, cos_z = math.sin(z), math.cos(z)
    if bc is BoundaryCondition.PINNED_PINNED:
        return 0.0, 1.0, 0.0, 0.0
    if bc is BoundaryCondition.PINNED_FREE:
        d = sin_z / math.sinh(z)
        return 0.0, 1.0, 2.0 * sin_z / (1.0 - ez * ez), -d
    if bc is BoundaryCondition.CLAMPED_FREE:
        sigma = (math.cosh(z) + cos_z) / (math.sinh(z) + sin_z)
        p = 2.0 * (sin_z - cos_z - ez) / (1.0 - ez * ez + 2.0 * sin_z * ez)
        return -1.0, sigma, p, 1.0 + sigma
    sigma = (math.cosh(z) - cos_z) / (math.sinh(z) - sin_z)
    p = 2.0 * (cos_z - sin_z - ez) / (1.0 - ez * ez - 2.0 * sin_z * ez)
    if bc is BoundaryCondition.FREE_FREE:
        return 1.0, -sigma, p, 1.0 + sigma
    # ClampedClamped and ClampedPinned share the clamped-root form.
    return -1.0, sigma, p, 1.0 + sigma


def _shape(coefficients, z: float, s: np.ndarray, derivative: int) -> np.ndarray:
    a, b, p, q = coefficients
    shift = 0.5 * math.pi * derivative
    return (
        a * np.cos(s + shift)
        + b * np.sin(s + shift)
        + 0.5 * p * np.exp(s - z)
        + 0.5 * q * (-1.0) ** derivative * np.exp(-s)
    )


def _normalization(coefficients, z: float) -> float:
    tip = float(_shape(coefficients, z, np.array([z]), 0)[0])
    grid = np.linspace(0.0, z, 2001)
    values = _shape(coefficients, z, grid, 0)
    k = int(np.argmax(np.abs(values)))
    if abs(tip) > 1e-8 * abs(values[k]):
        return tip
    lower, upper = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    sign = 1.0 if values[k] > 0 else -1.0
    best = optimize.minimize_scalar(
        lambda s: -sign * float(_shape(coefficients, z, np.array([s]), 0)[0]),
        bounds=(lower, upper),
        method="bounded",
        options={"xatol": 1e-13},
    )
    peak = -best.fun * sign
    return peak if abs(peak) >= abs(values[k]) else float(values[k])


@dataclass(frozen=True)
class ModalBasis:
    """A truncated set of normalized beam mode shapes.

    Clamped-root and free-tip families are scaled so that ``phi_j(length) = 1``; families whose tip
    value vanishes (PinnedPinned, ClampedPinned, ClampedClamped) are scaled to ``max |phi_j| = 1``.

    Attributes:
        bc: Boundary-condition family.
        length: Beam length (m).
        n: Truncation order.
        roots: Wavenumbers beta_j (1/m).
        scales: Normalization divisors applied to the raw shapes.
        coefficients: Raw ``(A, B, P, Q)`` per mode.
    """

    bc: BoundaryCondition
    length: float
    n: int
    roots: Tuple[float, ...]
    scales: Tuple[float, ...]
    coefficients: Tuple[Tuple[float, float, float, float], ...]

    @classmethod
    def create(cls, bc: Union[str, BoundaryCondition], length: float, n: int) -> "ModalBasis":
        """Solve the roots and normalization of a family.

        Parameters:
            bc: Boundary-condition family.
            length: Beam length (m).
            n: Truncation order; 0 gives an empty (rigid) basis.

        Returns:
            ModalBasis: The basis.
        """
        return _create_basis(BoundaryCondition.parse(bc), float(length), int(n))

    @property
    def dimensionless_roots(self) -> np.ndarray:
        return np.asarray(self.roots) * self.length

    def _check_domain(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        tolerance = 1e-12 * self.length
        if np.any(x < -tolerance) or np.any(x > self.length + tolerance):
            raise DomainError("OutOfRange", "Abscissa outside the beam", f"0 <= x <= {self.length}")
        return np.clip(x, 0.0, self.length)

    def phi_matrix(self, x, derivative: int = 0) -> np.ndarray:
        """Evaluate all modes at the given abscissae.

        Parameters:
            x: Abscissa or array of abscissae (m).
            derivative: Spatial derivative order, 0 to 4.

        Returns:
            numpy.ndarray: Array of shape ``(len(x), n)``.

        Raises:
            DomainError: If an abscissa lies outside ``[0, length]`` or the order is unsupported.
        """
        if derivative not in range(5):
            raise DomainError("BadDerivative", "Derivative order must be between 0 and 4", f"order={derivative}")
        xs = np.atleast_1d(self._check_domain(x))
        values = np.empty((xs.size, self.n))
        for j in range(self.n):
            beta = self.roots[j]
            z = beta * self.length
            values[:, j] = beta**derivative * _shape(self.coefficients[j], z, beta * xs, derivative) / self.scales[j]
        return values

    def tip_values(self, derivative: int = 0) -> np.ndarray:
        """Mode values (or derivatives) at the tip ``x = length``, shape ``(n,)``."""
        return self.phi_matrix(self.length, derivative)[0]


@lru_cache(maxsize=64)
def _create_basis(bc: BoundaryCondition, length: float, n: int) -> ModalBasis:
    roots = solve_characteristic_roots(bc, length, n)
    coefficients = []
    scales = []
    for beta in roots:
        z = beta * length
        coefficient = _raw_coefficients(bc, z)
        coefficients.append(coefficient)
        scales.append(_normalization(coefficient, z))
    return ModalBasis(bc, length, n, tuple(float(b) for b in roots), tuple(scales), tuple(coefficients))


def eval_phi(basis: ModalBasis, j: int, x, derivative: int = 0):
    """Evaluate mode ``j`` (1-based) or one of its spatial derivatives.

    Parameters:
        basis: Modal basis.
        j: Mode index, 1 to n.
        x: Abscissa or array of abscissae (m).
        derivative: Derivative order (0 to 4).

    Returns:
        float or numpy.ndarray: Dimensionless for order 0, 1/m^k for order k.

    Raises:
        DomainError: If ``j`` or ``x`` is out of range.
    """
    if not 1 <= j <= basis.n:
        raise DomainError("BadModeIndex", "Mode index out of range", f"1 <= j <= {basis.n}")
    values = basis.phi_matrix(x, derivative)[:, j - 1]
    return float(values[0]) if np.ndim(x) == 0 else values


def _check_coordinates(basis: ModalBasis, q_f_i) -> np.ndarray:
    q_f_i = np.asarray(q_f_i, dtype=float).reshape(-1)
    if q_f_i.size != basis.n:
        raise ValidationError("DimensionMismatch", "Modal coordinate count does not match the basis", f"{q_f_i.size} != {basis.n}")
    return q_f_i


def deformation_field(basis: ModalBasis, q_f_i, x, derivative: int = 0):
    """Transverse deflection of one link, ``omega_i(x) = sum_j phi_j(x) q_f_ij``.

    Parameters:
        basis: Modal basis of the link.
        q_f_i: Modal coordinates of the link, length n.
        x: Abscissa or array of abscissae (m).
        derivative: Spatial derivative order.

    Returns:
        float or numpy.ndarray: Deflection (m) or its derivative.

    Raises:
        ValidationError: If ``q_f_i`` does not have n entries.
    """
    q_f_i = _check_coordinates(basis, q_f_i)
    values = basis.phi_matrix(x, derivative) @ q_f_i
    return float(values[0]) if np.ndim(x) == 0 else values


def deformation_profile(basis: ModalBasis, q_f_i, xs) -> np.ndarray:
    """Deflection of one link at an array of abscissae."""
    return np.asarray(deformation_field(basis, q_f_i, np.atleast_1d(xs)))


def tip_slope(basis: ModalBasis, q_f_i) -> float:
    """Slope of the deflected link at its tip (rad), small-deflection regime.

    Parameters:
        basis: Modal basis of the link.
        q_f_i: Modal coordinates of the link.

    Returns:
        float: ``sum_j phi_j'(length) q_f_ij``.
    """
    slope = float(basis.tip_values(1) @ _check_coordinates(basis, q_f_i)) if basis.n else 0.0
    if abs(slope) > TIP_SLOPE_WARNING:
        logger.warning(f"Tip slope {slope:.3f} rad exceeds the small-deflection range of {TIP_SLOPE_WARNING} rad")
    return slope


def natural_frequencies(basis: ModalBasis, flexural_rigidity: float, linear_density: float) -> Tuple[np.ndarray, np.ndarray]:
    """Natural frequencies of the elastic modes.

    Parameters:
        basis: Modal basis.
        flexural_rigidity: EI (N m^2).
        linear_density: Mass per unit length (kg/m).

    Returns:
        tuple: ``(omega, f)`` in rad/s and Hz.
    """
    omega = np.asarray(basis.roots) ** 2 * math.sqrt(flexural_rigidity / linear_density)
    return omega, omega / (2.0 * math.pi)


def basis_summary_frame(basis: ModalBasis, flexural_rigidity: float, linear_density: float) -> pd.DataFrame:
    """Tabulate roots and natural frequencies, one row per mode."""
    omega, frequency = natural_frequencies(basis, flexural_rigidity, linear_density)
    return pd.DataFrame(
        {
            "mode": np.arange(1, basis.n + 1),
            "beta": np.asarray(basis.roots),
            "beta_l": basis.dimensionless_roots,
            "omega_rad_s": omega,
            "f_hz": frequency,
        }
    )


def gauss_legendre(length: float, nodes: int = 32) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre abscissae and weights mapped onto ``[0, length]``."""
    x, w = special.roots_legendre(nodes)
    return 0.5 * length * (x + 1.0), 0.5 * length * w


@dataclass(frozen=True, eq=False)
class BeamIntegrals:
    """Quadrature data and modal integrals of a basis.

    Attributes:
        nodes: Quadrature abscissae (m).
        weights: Quadrature weights (m).
        phi: Mode values at the nodes, ``(nodes, n)``.
        mass: ``int phi_j phi_k dx`` (m).
        first_moment: ``int x phi_j dx`` (m^2).
        curvature: ``int phi_j'' phi_k'' dx`` (1/m^3).
        tip: ``phi_j(length)``.
        tip_slope: ``phi_j'(length)`` (1/m).
    """

    nodes: np.ndarray
    weights: np.ndarray
    phi: np.ndarray
    mass: np.ndarray
    first_moment: np.ndarray
    curvature: np.ndarray
    tip: np.ndarray
    tip_slope: np.ndarray


@lru_cache(maxsize=64)
def beam_integrals(basis: ModalBasis, nodes: int = 32) -> BeamIntegrals:
    """Compute (and cache) the modal integrals of a basis by Gauss-Legendre quadrature.

    Parameters:
        basis: Modal basis.
        nodes: Number of quadrature nodes.

    Returns:
        BeamIntegrals: Integrals and tip values.
    """
    x, w = gauss_legendre(basis.length, nodes)
    phi = basis.phi_matrix(x)
    phi2 = basis.phi_matrix(x, 2)
    return BeamIntegrals(
        nodes=x,
        weights=w,
        phi=phi,
        mass=phi.T @ (w[:, None] * phi),
        first_moment=phi.T @ (w * x),
        curvature=phi2.T @ (w[:, None] * phi2),
        tip=basis.tip_values(0),
        tip_slope=basis.tip_values(1),
    )
