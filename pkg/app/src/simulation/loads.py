"""
Load signal generators: decaying harmonic shaker, synthetic base excitation
and half-sine impact.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.signal

from app.models.schemas import LoadDescriptor
from app.src.structure.matrices import ShearBuildingSpec, validate_spec
from app.utils.exceptions import (
    InvalidStepError, InvalidDofError, InvalidBandError,
    TruncationError, InvalidScenarioError
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LoadSignal:
    """Force history on a uniform grid: ``forces`` is T x n [N]."""
    time_grid: np.ndarray
    forces: np.ndarray
    dt: float
    descriptor: LoadDescriptor

    @property
    def n_samples(self) -> int:
        return self.forces.shape[0]

    @property
    def n_dofs(self) -> int:
        return self.forces.shape[1]


def make_time_grid(duration: float, dt: float) -> np.ndarray:
    """Uniform instants k*dt for k = 0..round(duration/dt)-1."""
    if not np.isfinite(dt) or dt <= 0:
        raise InvalidStepError(f"Time step must be positive, got {dt}")
    if duration <= 0:
        raise InvalidScenarioError(f"Duration must be positive, got {duration}")
    n_samples = int(round(duration / dt))
    if n_samples < 1:
        raise InvalidScenarioError(f"Duration {duration} shorter than one step {dt}")
    return np.arange(n_samples) * dt


def _check_dof(dof: int, n: int) -> None:
    if not 0 <= dof < n:
        raise InvalidDofError(f"DOF index {dof} outside [0, {n})")


def gen_decaying_harmonic(amplitude: float, omega: float, decay: float, onset: float,
                          duration: float, dt: float, dof: int, n: int) -> LoadSignal:
    """Exponentially decaying sinusoid applied at one DOF from ``onset`` on.

    F(t) = amplitude * exp(-decay (t - onset)) * sin(omega (t - onset)) for t >= onset.
    """
    _check_dof(dof, n)
    if decay < 0:
        raise InvalidScenarioError(f"decay must be non-negative, got {decay}")
    if onset >= duration:
        raise InvalidScenarioError(f"onset {onset} must precede the end of the record {duration}")
    t = make_time_grid(duration, dt)

    tau = t - onset
    active = tau >= 0
    signal = np.zeros_like(t)
    signal[active] = amplitude * np.exp(-decay * tau[active]) * np.sin(omega * tau[active])

    forces = np.zeros((t.size, n))
    forces[:, dof] = signal
    descriptor = LoadDescriptor(
        kind="harmonic",
        params={"amplitude": amplitude, "omega": omega, "decay": decay, "onset": onset, "dof": dof},
    )
    return LoadSignal(time_grid=t, forces=forces, dt=float(dt), descriptor=descriptor)


def envelope_shape(t: np.ndarray, rise: float, plateau: float, fall: float) -> np.ndarray:
    """Quadratic build-up, flat plateau, cosine decay to zero."""
    env = np.zeros_like(t)
    t1 = rise
    t2 = rise + plateau
    t3 = t2 + fall

    building = t < t1
    env[building] = (t[building] / rise) ** 2
    env[(t >= t1) & (t < t2)] = 1.0
    decaying = (t >= t2) & (t < t3)
    env[decaying] = 0.5 * (1.0 + np.cos(np.pi * (t[decaying] - t2) / fall))
    return env


def gen_base_excitation(intensity: float, corner_freqs: Tuple[float, float],
                        envelope: Tuple[float, float, float], duration: float, dt: float,
                        spec: ShearBuildingSpec, seed: int) -> LoadSignal:
    """Synthetic ground motion as effective story forces F = -M 1 a_g.

    The ground acceleration is band-passed Gaussian noise (second-order
    bilinear band-pass) shaped by a rise/plateau/fall envelope and scaled to a
    peak of ``intensity`` [m/s^2].
    """
    validate_spec(spec)
    f_lo, f_hi = float(corner_freqs[0]), float(corner_freqs[1])
    t = make_time_grid(duration, dt)
    nyquist = 0.5 / dt
    if not (0 < f_lo < f_hi < nyquist):
        raise InvalidBandError(f"Band ({f_lo}, {f_hi}) Hz must satisfy 0 < f_lo < f_hi < {nyquist} Hz")
    rise, plateau, fall = envelope
    if rise <= 0 or plateau < 0 or fall <= 0:
        raise InvalidScenarioError(f"Envelope {envelope} needs positive rise/fall and non-negative plateau")

    rng = np.random.default_rng(seed)
    white = rng.standard_normal(t.size)
    b, a = scipy.signal.butter(1, [f_lo, f_hi], btype="bandpass", fs=1.0 / dt)
    ground = scipy.signal.lfilter(b, a, white) * envelope_shape(t, rise, plateau, fall)

    peak = np.max(np.abs(ground)) if ground.size else 0.0
    if intensity == 0 or peak == 0:
        ground = np.zeros_like(t)
    else:
        ground = ground * (intensity / peak)

    masses = np.asarray(spec.masses, dtype=float)
    forces = -np.outer(ground, masses)
    descriptor = LoadDescriptor(
        kind="base",
        params={"intensity": intensity, "f_lo": f_lo, "f_hi": f_hi, "rise": rise, "plateau": plateau, "fall": fall},
        seed=int(seed),
    )
    return LoadSignal(time_grid=t, forces=forces, dt=float(dt), descriptor=descriptor)


def gen_impulse(peak: float, width: float, impact_time: float, duration: float,
                dt: float, dof: int, n: int) -> LoadSignal:
    """Half-sine hammer pulse peak*sin(pi (t - t0)/width) on (t0, t0 + width)."""
    _check_dof(dof, n)
    t = make_time_grid(duration, dt)
    if width < 2 * dt - 1e-12 * dt:
        raise InvalidScenarioError(f"Pulse width {width} must span at least two steps of {dt}")
    if impact_time < 0 or impact_time + width > t[-1] + 1e-9 * dt:
        raise TruncationError(f"Pulse [{impact_time}, {impact_time + width}] exceeds the record [0, {t[-1]}]")

    tau = t - impact_time
    tol = 1e-9 * dt
    inside = (tau > tol) & (tau < width - tol)
    signal = np.zeros_like(t)
    signal[inside] = peak * np.sin(np.pi * tau[inside] / width)

    forces = np.zeros((t.size, n))
    forces[:, dof] = signal
    descriptor = LoadDescriptor(
        kind="impulse",
        params={"peak": peak, "width": width, "impact_time": impact_time, "dof": dof},
    )
    return LoadSignal(time_grid=t, forces=forces, dt=float(dt), descriptor=descriptor)


def combine_loads(loads: List[LoadSignal], seed: Optional[int] = None) -> LoadSignal:
    """Superpose loads sharing one grid; descriptor parameters get a story suffix."""
    if not loads:
        raise InvalidScenarioError("No load signals to combine")
    if len(loads) == 1:
        return loads[0]
    first = loads[0]
    forces = np.sum([load.forces for load in loads], axis=0)
    params = {}
    for load in loads:
        story = int(load.descriptor.params.get("dof", 0)) + 1
        params.update({f"{key}_{story}": value for key, value in load.descriptor.params.items() if key != "dof"})
    descriptor = LoadDescriptor(kind=first.descriptor.kind, params=params, seed=seed)
    return LoadSignal(time_grid=first.time_grid, forces=forces, dt=first.dt, descriptor=descriptor)
