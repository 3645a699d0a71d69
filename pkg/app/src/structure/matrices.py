"""
Shear-chain structural matrices and the parameter vector mapping.

The parameter vector is ordered [k_1..k_n, c_1..c_n]; masses are known and
never part of it.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from app.utils.exceptions import InvalidSpecError, InvalidParameterError
from app.utils.validators import validate_positive_array


@dataclass(frozen=True)
class ShearBuildingSpec:
    """Lumped-mass shear building: story masses and inter-story springs/dashpots."""
    n_stories: int
    masses: Tuple[float, ...]
    stiffnesses: Tuple[float, ...]
    dampings: Tuple[float, ...]

    @classmethod
    def from_arrays(cls, masses: Sequence[float], stiffnesses: Sequence[float], dampings: Sequence[float]) -> "ShearBuildingSpec":
        return cls(
            n_stories=len(masses),
            masses=tuple(float(m) for m in masses),
            stiffnesses=tuple(float(k) for k in stiffnesses),
            dampings=tuple(float(c) for c in dampings),
        )


@dataclass(frozen=True, eq=False)
class SystemMatrices:
    """Dense mass, damping and stiffness matrices."""
    M: np.ndarray
    C: np.ndarray
    K: np.ndarray

    @property
    def n(self) -> int:
        return self.M.shape[0]


def validate_spec(spec: ShearBuildingSpec) -> None:
    """Raise InvalidSpecError unless every array has n_stories positive entries."""
    if spec.n_stories < 1:
        raise InvalidSpecError(f"n_stories must be positive, got {spec.n_stories}")
    for name in ("masses", "stiffnesses", "dampings"):
        values = getattr(spec, name)
        if len(values) != spec.n_stories:
            raise InvalidSpecError(f"{name} has {len(values)} entries, expected {spec.n_stories}")
        if not validate_positive_array(values):
            raise InvalidSpecError(f"{name} must be strictly positive: {values}")


def chain_matrix(coefficients: np.ndarray) -> np.ndarray:
    """Assemble the tridiagonal shear-chain pattern for springs or dashpots.

    Diagonal entry i is coef_i + coef_{i+1} (the last one coef_n alone) and the
    off-diagonals are -coef_{i+1}.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    n = coefficients.size
    diag = coefficients.copy()
    diag[:-1] += coefficients[1:]
    mat = np.diag(diag)
    if n > 1:
        off = -coefficients[1:]
        mat[np.arange(n - 1), np.arange(1, n)] = off
        mat[np.arange(1, n), np.arange(n - 1)] = off
    return mat


def chain_force(coefficients: np.ndarray, x: np.ndarray) -> np.ndarray:
    """chain_matrix(coefficients) @ x from inter-story drifts, without assembling."""
    coefficients = np.asarray(coefficients, dtype=float)
    x = np.asarray(x, dtype=float)
    drift = np.diff(x, prepend=0.0)
    story = coefficients * drift
    force = story.copy()
    force[:-1] -= story[1:]
    return force


def build_shear_matrices(spec: ShearBuildingSpec) -> SystemMatrices:
    """Build M, C, K for a shear building.

    Args:
        spec: Building specification

    Returns:
        SystemMatrices with diagonal M and symmetric tridiagonal C, K

    Raises:
        InvalidSpecError: Non-positive or length-mismatched arrays
    """
    validate_spec(spec)
    M = np.diag(np.asarray(spec.masses, dtype=float))
    C = chain_matrix(np.asarray(spec.dampings))
    K = chain_matrix(np.asarray(spec.stiffnesses))
    return SystemMatrices(M=M, C=C, K=K)


def theta_of(spec: ShearBuildingSpec) -> np.ndarray:
    """Parameter vector [k_1..k_n, c_1..c_n] of a specification."""
    return np.concatenate([np.asarray(spec.stiffnesses, dtype=float), np.asarray(spec.dampings, dtype=float)])


def spec_with_theta(theta: np.ndarray, template: ShearBuildingSpec) -> ShearBuildingSpec:
    """Copy of ``template`` whose stiffness and damping come from ``theta``."""
    theta = np.asarray(theta, dtype=float)
    n = template.n_stories
    if theta.shape != (2 * n,):
        raise InvalidParameterError(f"theta must have {2 * n} entries, got shape {theta.shape}")
    if not validate_positive_array(theta):
        raise InvalidParameterError(f"theta entries must be strictly positive: {theta}")
    return ShearBuildingSpec(
        n_stories=n,
        masses=template.masses,
        stiffnesses=tuple(float(v) for v in theta[:n]),
        dampings=tuple(float(v) for v in theta[n:]),
    )


def matrices_from_theta(theta: np.ndarray, template: ShearBuildingSpec) -> SystemMatrices:
    """Rebuild the structural matrices for a parameter vector.

    Args:
        theta: [k_1..k_n, c_1..c_n], strictly positive
        template: Supplies the (known) masses

    Returns:
        SystemMatrices; M never depends on theta

    Raises:
        InvalidParameterError: Wrong length or non-positive entries
    """
    return build_shear_matrices(spec_with_theta(theta, template))

