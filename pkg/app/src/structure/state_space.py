"""
First-order state-space form z' = A z + B u of the structure, z = [y; y'],
and its second-order-truncated discretization.
"""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import scipy.linalg

from app.src.structure.matrices import SystemMatrices
from app.utils.exceptions import SingularMassError, InvalidStepError, InvalidDofError
from app.utils.validators import validate_dof_indices


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Continuous model: A is 2n x 2n, B is 2n x m for the loaded DOFs."""
    A: np.ndarray
    B: np.ndarray
    input_dofs: List[int]


@dataclass(frozen=True, eq=False)
class DiscreteStateSpace:
    """Discrete model z_{k+1} = A_d z_k + B_d u_k."""
    A_d: np.ndarray
    B_d: np.ndarray
    dt: float


def mass_inverse_times(M: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Solve M Z = X, raising SingularMassError for a singular mass matrix."""
    try:
        return scipy.linalg.solve(M, X, assume_a="sym", check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as e:
        raise SingularMassError(f"Mass matrix is singular: {e}") from e


def selection_matrix(n: int, dofs: Sequence[int]) -> np.ndarray:
    """Columns of the n x n identity for the given DOFs."""
    return np.eye(n)[:, list(dofs)]


def assemble_state_space(mats: SystemMatrices, input_dofs: Sequence[int]) -> StateSpace:
    """Assemble A = [[0, I], [-M^-1 K, -M^-1 C]] and B = [0; M^-1 S].

    Args:
        mats: Structural matrices
        input_dofs: 0-based loaded DOFs (S selects these identity columns)

    Returns:
        StateSpace

    Raises:
        SingularMassError: M cannot be inverted
        InvalidDofError: An input DOF lies outside [0, n)
    """
    n = mats.n
    input_dofs = [int(d) for d in input_dofs]
    if not validate_dof_indices(input_dofs, n):
        raise InvalidDofError(f"input_dofs {input_dofs} must be distinct indices in [0, {n})")

    if np.any(np.abs(np.diag(mats.M)) == 0) or not np.all(np.isfinite(mats.M)):
        raise SingularMassError("Mass matrix has a zero or non-finite diagonal entry")

    S = selection_matrix(n, input_dofs)
    rhs = np.hstack([mats.K, mats.C, S])
    solved = mass_inverse_times(mats.M, rhs)
    MinvK, MinvC, MinvS = solved[:, :n], solved[:, n:2 * n], solved[:, 2 * n:]

    A = np.block([
        [np.zeros((n, n)), np.eye(n)],
        [-MinvK, -MinvC],
    ])
    B = np.vstack([np.zeros((n, len(input_dofs))), MinvS])
    return StateSpace(A=A, B=B, input_dofs=input_dofs)


def discretize(ss: StateSpace, dt: float) -> DiscreteStateSpace:
    """Discretize with A_d = I + dt A + dt^2/2 A^2 and B_d = dt B.

    Args:
        ss: Continuous model
        dt: Time step [s]

    Returns:
        DiscreteStateSpace

    Raises:
        InvalidStepError: dt <= 0
    """
    if not np.isfinite(dt) or dt <= 0:
        raise InvalidStepError(f"Time step must be positive, got {dt}")
    A = ss.A
    A_d = np.eye(A.shape[0]) + dt * A + (dt * dt / 2.0) * (A @ A)
    B_d = dt * ss.B
    return DiscreteStateSpace(A_d=A_d, B_d=B_d, dt=float(dt))
