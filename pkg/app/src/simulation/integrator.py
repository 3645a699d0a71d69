"""
Classic fourth-order Runge-Kutta integration of M y'' + C y' + K y = F(t).
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.src.simulation.loads import LoadSignal
from app.src.structure.matrices import SystemMatrices
from app.src.structure.state_space import assemble_state_space, mass_inverse_times
from app.utils.exceptions import DivergenceError, InvalidLengthError, InvalidStepError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ResponseRecord:
    """Displacements, velocities and accelerations (each T x n) of one run."""
    time_grid: np.ndarray
    displacements: np.ndarray
    velocities: np.ndarray
    accelerations: np.ndarray
    load: LoadSignal


def reconstruct_accelerations(mats: SystemMatrices, forces: np.ndarray,
                              displacements: np.ndarray, velocities: np.ndarray) -> np.ndarray:
    """a = M^-1 (F - C v - K y) at every row of the T x n inputs."""
    rhs = forces - velocities @ mats.C.T - displacements @ mats.K.T
    return mass_inverse_times(mats.M, rhs.T).T


def integrate_rk4(mats: SystemMatrices, load: LoadSignal, z0: Optional[np.ndarray] = None) -> ResponseRecord:
    """
    Integrate the structure under ``load`` with RK4 on its sampling grid.

    The load is interpolated linearly to the half steps. Accelerations are
    reconstructed from the equation of motion so the stored record satisfies
    it to round-off.

    Args:
        mats: Structural matrices
        load: Forces on a uniform grid (T x n)
        z0: Initial state [y; y'] of length 2n (zero when omitted)

    Returns:
        ResponseRecord

    Raises:
        DivergenceError: Non-finite state, reporting the first bad step
    """
    n = mats.n
    forces = np.asarray(load.forces, dtype=float)
    if forces.ndim != 2 or forces.shape[1] != n:
        raise InvalidLengthError(f"Load has shape {forces.shape}, expected (T, {n})")
    dt = float(load.dt)
    if not np.isfinite(dt) or dt <= 0:
        raise InvalidStepError(f"Time step must be positive, got {dt}")

    z = np.zeros(2 * n) if z0 is None else np.asarray(z0, dtype=float).copy()
    if z.shape != (2 * n,):
        raise InvalidLengthError(f"z0 must have {2 * n} entries, got {z.shape}")

    ss = assemble_state_space(mats, range(n))
    A = ss.A
    # Input contributions at the samples and at the interpolated midpoints
    Bu = forces @ ss.B.T
    Bu_mid = 0.5 * (Bu[:-1] + Bu[1:])

    n_samples = forces.shape[0]
    states = np.empty((n_samples, 2 * n))
    states[0] = z
    half = 0.5 * dt

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_samples - 1):
            k1 = A @ z + Bu[k]
            k2 = A @ (z + half * k1) + Bu_mid[k]
            k3 = A @ (z + half * k2) + Bu_mid[k]
            k4 = A @ (z + dt * k3) + Bu[k + 1]
            z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(z)):
                logger.error(f"RK4 integration diverged at step {k + 1}")
                raise DivergenceError("Non-finite state during RK4 integration", step=k + 1)
            states[k + 1] = z

    displacements = states[:, :n]
    velocities = states[:, n:]
    accelerations = reconstruct_accelerations(mats, forces, displacements, velocities)
    logger.debug(f"Integrated {n_samples} samples of a {n}-DOF structure at dt={dt}")
    return ResponseRecord(
        time_grid=load.time_grid,
        displacements=displacements,
        velocities=velocities,
        accelerations=accelerations,
        load=load,
    )
