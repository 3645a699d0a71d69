"""
Linear Kalman predict/update primitives used by the residual filter.
"""

import logging
from typing import Tuple, TYPE_CHECKING

import numpy as np
import scipy.linalg

from app.src.structure.state_space import DiscreteStateSpace
from app.utils.exceptions import IllConditionedInnovationError

if TYPE_CHECKING:
    from app.src.rkf.filter import FilterState

logger = logging.getLogger(__name__)

# Largest accepted condition number of the pre-fit residual covariance
MAX_INNOVATION_CONDITION = 1e14


def symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def predict(state: "FilterState", dss: DiscreteStateSpace, Q_d: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Propagate the state with the previous input estimate held.

    Args:
        state: Posterior of the previous step
        dss: Discrete model for the current parameters
        Q_d: Process noise covariance

    Returns:
        (z_pred, P_pred)
    """
    z_pred = dss.A_d @ state.z + dss.B_d @ state.u_est
    P_pred = symmetrize(dss.A_d @ state.P @ dss.A_d.T + Q_d)
    return z_pred, P_pred


def gain(P_pred: np.ndarray, H: np.ndarray, R_d: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Kalman gain J = P H^T N^-1 with N = H P H^T + R, via a linear solve.

    Args:
        P_pred: Predicted covariance
        H: Observation matrix
        R_d: Observation noise covariance

    Returns:
        (J, N)

    Raises:
        IllConditionedInnovationError: N is singular or numerically so
    """
    PHt = P_pred @ H.T
    N = symmetrize(H @ PHt + R_d)
    condition = float(np.linalg.cond(N))
    if not np.isfinite(condition) or condition > MAX_INNOVATION_CONDITION:
        raise IllConditionedInnovationError(
            f"Pre-fit residual covariance is singular (condition {condition:.3e})", condition=condition
        )
    # N is symmetric: J^T = N^-1 (P H^T)^T
    J = scipy.linalg.solve(N, PHt.T, assume_a="sym").T
    return J, N


def update_state(z_pred: np.ndarray, P_pred: np.ndarray, y: np.ndarray,
                 H: np.ndarray, J: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Posterior z = z_pred + J (y - H z_pred), P = (I - J H) P_pred (symmetrized)."""
    z_post = z_pred + J @ (y - H @ z_pred)
    P_post = symmetrize((np.eye(P_pred.shape[0]) - J @ H) @ P_pred)
    return z_post, P_post
