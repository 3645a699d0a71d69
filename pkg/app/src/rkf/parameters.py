"""
Gauss-Newton parameter correction: finite-difference sensitivities and the
residual-damped regularized step.
"""

import logging
from typing import Callable, Optional, Union

import numpy as np
import scipy.linalg

from app.utils.exceptions import InvalidParameterError, RegularizationRequiredError, SensitivityFailureError

logger = logging.getLogger(__name__)


def sensitivity(pred_fn: Callable[[np.ndarray], np.ndarray], theta: np.ndarray, fd_step: float) -> np.ndarray:
    """
    U = -d pred / d theta by central differences.

    Column j perturbs theta_j by fd_step * max(|theta_j|, 1). The filter
    passes the predicted inertial force M a, so U carries force units.

    Args:
        pred_fn: Maps a parameter vector to the predicted quantity
        theta: Expansion point
        fd_step: Relative perturbation, > 0

    Returns:
        U with one row per predicted entry and one column per parameter

    Raises:
        InvalidParameterError: fd_step is not positive
        SensitivityFailureError: A perturbed evaluation is not finite
    """
    if fd_step <= 0:
        raise InvalidParameterError(f"fd_step must be positive, got {fd_step}")
    theta = np.asarray(theta, dtype=float)
    columns = []
    for j in range(theta.size):
        h = fd_step * max(abs(theta[j]), 1.0)
        plus = theta.copy()
        minus = theta.copy()
        plus[j] += h
        minus[j] -= h
        p_plus = np.atleast_1d(np.asarray(pred_fn(plus), dtype=float))
        p_minus = np.atleast_1d(np.asarray(pred_fn(minus), dtype=float))
        if not (np.all(np.isfinite(p_plus)) and np.all(np.isfinite(p_minus))):
            raise SensitivityFailureError(f"Non-finite prediction when perturbing parameter {j}")
        columns.append(-(p_plus - p_minus) / (2.0 * h))
    return np.column_stack(columns)


def update_parameters(theta: np.ndarray, U: np.ndarray, rho: np.ndarray,
                      eps: Optional[np.ndarray] = None, lambda2: float = 5e-2, mu: float = 5e-3,
                      floor: Optional[Union[float, np.ndarray]] = None) -> np.ndarray:
    """
    Regularized Gauss-Newton step scaled by exp(-mu ||rho||).

    delta = (U^T U + lambda2 I)^-1 U^T rho and theta_new = theta + delta exp(-mu ||rho||),
    clamped from below by ``floor``. ``eps`` is accepted for call-site symmetry
    with the output error but does not enter the step.

    Raises:
        RegularizationRequiredError: U^T U is singular and lambda2 is zero
    """
    theta = np.asarray(theta, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if not np.any(rho):
        return theta.copy()

    U = np.asarray(U, dtype=float)
    normal = U.T @ U + lambda2 * np.eye(theta.size)
    if lambda2 == 0 and np.linalg.matrix_rank(normal) < theta.size:
        raise RegularizationRequiredError("U^T U is singular; a positive lambda2 is required")

    try:
        delta = scipy.linalg.solve(normal, U.T @ rho, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise RegularizationRequiredError(f"Gauss-Newton normal matrix is singular: {e}") from e

    step = np.exp(-mu * np.linalg.norm(rho))
    theta_new = theta + delta * step
    if floor is not None:
        clamped = theta_new < floor
        if np.any(clamped):
            logger.debug(f"Clamped parameters {np.flatnonzero(clamped).tolist()} to their floor")
            theta_new = np.maximum(theta_new, floor)
    return theta_new
