"""
Measurement side of the simulation: calibrated sensor noise and
pseudo-measurements (integrated accelerations), offline and stepwise.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.integrate
import scipy.signal

from app.utils.exceptions import DegenerateChannelError, InvalidStepError, InvalidScenarioError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Noisy accelerations of the measured DOFs and their pseudo-measurements.

    ``noisy_accel``, ``pseudo_disp`` and ``pseudo_vel`` are T x len(measured_dofs),
    not T x n: unmeasured channels are never stored. Column j belongs to
    ``measured_dofs[j]``; the filter fills the remaining DOFs itself.
    """
    measured_dofs: List[int]
    noisy_accel: np.ndarray
    nsr: float
    pseudo_disp: np.ndarray
    pseudo_vel: np.ndarray
    dt: float
    seed: Optional[int] = None

    @property
    def n_samples(self) -> int:
        return self.noisy_accel.shape[0]

    @property
    def time_grid(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt


def rms(values: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.sqrt(np.mean(np.square(values), axis=axis))


def add_noise(clean: np.ndarray, nsr: float, seed: Optional[int]) -> np.ndarray:
    """
    Add zero-mean Gaussian noise whose RMS is exactly ``nsr`` times the
    RMS of each channel.

    Args:
        clean: T x c (or length T) signal
        nsr: Noise-to-signal RMS ratio, >= 0
        seed: Noise stream seed

    Returns:
        Noisy copy of ``clean``

    Raises:
        DegenerateChannelError: A channel has zero RMS while nsr > 0
    """
    clean = np.asarray(clean, dtype=float)
    if nsr < 0:
        raise InvalidScenarioError(f"nsr must be non-negative, got {nsr}")
    if nsr == 0:
        return clean.copy()

    signal = clean.reshape(clean.shape[0], -1)
    signal_rms = rms(signal)
    if np.any(signal_rms == 0):
        bad = np.flatnonzero(signal_rms == 0).tolist()
        raise DegenerateChannelError(f"Channels {bad} have zero RMS; cannot scale noise to nsr={nsr}")

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(signal.shape)
    noise *= (nsr * signal_rms) / rms(noise)
    return (signal + noise).reshape(clean.shape)


def leak_factor(cutoff_hz: Optional[float], dt: float) -> float:
    """Pole of the leaky integrator; 1.0 means plain trapezoid integration."""
    if cutoff_hz is None:
        return 1.0
    if cutoff_hz <= 0:
        raise InvalidScenarioError(f"detrend cutoff must be positive, got {cutoff_hz}")
    return float(np.exp(-2.0 * np.pi * cutoff_hz * dt))


def _integrate(values: np.ndarray, dt: float, alpha: float) -> np.ndarray:
    if alpha == 1.0:
        return scipy.integrate.cumulative_trapezoid(values, dx=dt, axis=0, initial=0)
    increments = np.zeros_like(values)
    increments[1:] = 0.5 * dt * (values[1:] + values[:-1])
    return scipy.signal.lfilter([1.0], [1.0, -alpha], increments, axis=0)


def make_pseudo_measurements(accel: np.ndarray, dt: float,
                             detrend_cutoff_hz: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrate accelerations once for velocity and twice for displacement.

    Both start at zero. With ``detrend_cutoff_hz`` each trapezoid step leaks
    toward zero with pole exp(-2 pi f_c dt), which bounds the drift.

    Args:
        accel: T x c accelerations
        dt: Sampling interval [s]
        detrend_cutoff_hz: Optional drift suppression cutoff

    Returns:
        (pseudo_disp, pseudo_vel), both shaped like ``accel``
    """
    if not np.isfinite(dt) or dt <= 0:
        raise InvalidStepError(f"Time step must be positive, got {dt}")
    accel = np.asarray(accel, dtype=float)
    alpha = leak_factor(detrend_cutoff_hz, dt)
    pseudo_vel = _integrate(accel, dt, alpha)
    pseudo_disp = _integrate(pseudo_vel, dt, alpha)
    return pseudo_disp, pseudo_vel


def measure(accelerations: np.ndarray, measured_dofs: List[int], nsr: float, dt: float,
            seed: Optional[int], detrend_cutoff_hz: Optional[float] = None) -> MeasurementSet:
    """Select the measured channels, add noise and build the pseudo-measurements."""
    clean = np.asarray(accelerations, dtype=float)[:, list(measured_dofs)]
    noisy = add_noise(clean, nsr, seed)
    pseudo_disp, pseudo_vel = make_pseudo_measurements(noisy, dt, detrend_cutoff_hz)
    return MeasurementSet(
        measured_dofs=list(measured_dofs),
        noisy_accel=noisy,
        nsr=float(nsr),
        pseudo_disp=pseudo_disp,
        pseudo_vel=pseudo_vel,
        dt=float(dt),
        seed=seed,
    )


def trapezoid_step(displacement: np.ndarray, velocity: np.ndarray, previous: np.ndarray,
                   accel: np.ndarray, dt: float, alpha: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """One online integration step; returns the new (displacement, velocity)."""
    half = 0.5 * dt
    new_velocity = alpha * velocity + half * (previous + accel)
    new_displacement = alpha * displacement + half * (velocity + new_velocity)
    return new_displacement, new_velocity
