"""
Residual Kalman filter: state estimation from pseudo-measurements, input
recovery through the structural model and online parameter correction.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.models.schemas import FilterConfig
from app.src.rkf.kalman import gain, predict, update_state
from app.src.rkf.parameters import sensitivity, update_parameters
from app.src.simulation.measurement import MeasurementSet, leak_factor, trapezoid_step
from app.src.structure.matrices import ShearBuildingSpec, chain_force, matrices_from_theta, theta_of
from app.src.structure.state_space import DiscreteStateSpace, assemble_state_space, discretize
from app.utils.exceptions import (
    DivergenceError, InvalidDofError, InvalidLengthError, InvalidParameterError, NumericalError
)
from app.utils.validators import validate_dof_indices

logger = logging.getLogger(__name__)


############################### Types ###############################

@dataclass(frozen=True, eq=False)
class FilterState:
    """Filter posterior at step ``k``.

    ``pseudo_disp``/``pseudo_vel`` are the online integrator values for every
    DOF and ``a_prev`` the acceleration frame they were last advanced with.
    ``rho_norm`` is the norm of the model residual in force units.
    """
    z: np.ndarray
    P: np.ndarray
    theta: np.ndarray
    u_est: np.ndarray
    a_est: np.ndarray
    k: int = 0
    pseudo_disp: Optional[np.ndarray] = None
    pseudo_vel: Optional[np.ndarray] = None
    a_prev: Optional[np.ndarray] = None
    dss: Optional[DiscreteStateSpace] = None
    innov_norm: float = 0.0
    rho_norm: float = 0.0


@dataclass(eq=False)
class EstimateTrace:
    """Per-step histories of one filter run (row k belongs to t = k dt)."""
    time_grid: np.ndarray
    u_est: np.ndarray
    theta: np.ndarray
    z: np.ndarray
    innov_norm: np.ndarray
    rho_norm: np.ndarray
    sequence_id: Optional[str] = None

    def __len__(self) -> int:
        return self.time_grid.shape[0]


@dataclass(frozen=True, eq=False)
class FilterModel:
    """Everything rkf_step needs besides the evolving state.

    ``H`` observes the pseudo displacement and velocity of every DOF; ``R_d``
    gives the channels filled from the filter's own estimate almost no weight.
    ``residual_rows`` marks measured DOFs with a known input, the only rows
    where the measured acceleration checks the model.
    """
    config: FilterConfig
    template: ShearBuildingSpec
    measured_dofs: List[int]
    known_mask: np.ndarray
    known_values: np.ndarray
    Q_d: np.ndarray
    R_d: np.ndarray
    H: np.ndarray
    residual_rows: np.ndarray
    dt: float
    alpha: float
    theta_floor: np.ndarray

    @property
    def n(self) -> int:
        return self.template.n_stories


############################### Model relations ###############################

def initial_theta(config: FilterConfig, template: ShearBuildingSpec) -> np.ndarray:
    """Configured theta0, or the template values shifted by the relative offsets."""
    n = template.n_stories
    if config.theta0 is not None:
        theta0 = np.asarray(config.theta0, dtype=float)
        if theta0.shape != (2 * n,):
            raise InvalidParameterError(f"theta0 must have {2 * n} entries, got {theta0.size}")
        return theta0
    theta = theta_of(template)
    theta[:n] *= 1.0 + config.stiffness_offset
    theta[n:] *= 1.0 + config.damping_offset
    return theta


def restoring_force(theta: np.ndarray, z: np.ndarray) -> np.ndarray:
    """K(theta) y + C(theta) v for the shear chain, z = [y; v]."""
    n = z.size // 2
    return chain_force(theta[:n], z[:n]) + chain_force(theta[n:], z[n:])


def estimate_input(a_meas_full: np.ndarray, z_post: np.ndarray, theta: np.ndarray,
                   known_inputs: np.ndarray, template: ShearBuildingSpec,
                   known_values: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Input through the system model, u = M a + K y + C v.

    Rows flagged in ``known_inputs`` are replaced by ``known_values``
    (zero when not given).

    Args:
        a_meas_full: Accelerations of every DOF (unmeasured ones filled in)
        z_post: Posterior state [y; v]
        theta: Current parameters
        known_inputs: Boolean mask of DOFs with known input
        template: Supplies the masses
        known_values: Values of the known inputs

    Returns:
        Input estimate, one entry per DOF
    """
    masses = np.asarray(template.masses, dtype=float)
    u = masses * np.asarray(a_meas_full, dtype=float) + restoring_force(theta, z_post)
    known_inputs = np.asarray(known_inputs, dtype=bool)
    if np.any(known_inputs):
        values = np.zeros_like(u) if known_values is None else np.asarray(known_values, dtype=float)
        u = np.where(known_inputs, values, u)
    return u


def estimated_accelerations(z_post: np.ndarray, u_est: np.ndarray, theta: np.ndarray,
                            template: ShearBuildingSpec) -> np.ndarray:
    """a = M^-1 (u - K y - C v)."""
    masses = np.asarray(template.masses, dtype=float)
    return (np.asarray(u_est, dtype=float) - restoring_force(theta, z_post)) / masses


def model_residual(a_est: np.ndarray, a_full: np.ndarray, rows: np.ndarray,
                   template: ShearBuildingSpec) -> np.ndarray:
    """
    rho = u^e - G(a_meas, z, theta) on ``rows``, in force units.

    On a known-input row u^e is the known value, so this reduces to
    M (a_pred - a_meas).
    """
    masses = np.asarray(template.masses, dtype=float)[rows]
    return masses * (np.asarray(a_est, dtype=float)[rows] - np.asarray(a_full, dtype=float)[rows])


def correct_parameters(theta: np.ndarray, z_post: np.ndarray, u_est: np.ndarray, a_full: np.ndarray,
                       model: "FilterModel") -> Tuple[np.ndarray, np.ndarray]:
    """
    One Gauss-Newton correction of theta against the measured accelerations.

    The predicted inertial force M a(theta) on the residual rows is
    differentiated numerically, so U and rho share force units and
    delta = (U^T U + lambda2 I)^-1 U^T rho is scale consistent.

    Args:
        theta: Parameters the posterior was computed with
        z_post: Posterior state
        u_est: Input estimate (known values on known rows)
        a_full: Accelerations used for the input estimate
        model: Supplies the residual rows, settings and floor

    Returns:
        (theta_new, rho)
    """
    rows = model.residual_rows
    template = model.template
    masses = np.asarray(template.masses, dtype=float)[rows]

    def inertial_force(candidate: np.ndarray) -> np.ndarray:
        return masses * estimated_accelerations(z_post, u_est, candidate, template)[rows]

    rho = inertial_force(theta) - masses * np.asarray(a_full, dtype=float)[rows]
    U = sensitivity(inertial_force, theta, model.config.fd_step)
    theta_new = update_parameters(
        theta, U, rho, lambda2=model.config.lambda2, mu=model.config.mu, floor=model.theta_floor
    )
    return theta_new, rho


############################### Filter construction ###############################

def resolve_known_inputs(config: FilterConfig, n: int, input_dofs: Optional[Sequence[int]]) -> np.ndarray:
    """Known-input mask: configured, else every DOF outside ``input_dofs`` is a known zero."""
    if config.known_inputs is not None:
        if len(config.known_inputs) != n:
            raise InvalidLengthError(f"known_inputs needs {n} flags, got {len(config.known_inputs)}")
        return np.asarray(config.known_inputs, dtype=bool)
    mask = np.zeros(n, dtype=bool)
    if input_dofs is not None:
        mask[:] = True
        mask[list(input_dofs)] = False
    return mask


def observation_noise(config: FilterConfig, measured_dofs: Sequence[int], n: int) -> np.ndarray:
    """
    R_d over [y; v] of every DOF: r_scale on measured channels,
    filled_r_scale on channels integrated from the filter's own estimate.
    """
    variances = np.full(n, config.filled_r_scale)
    variances[list(measured_dofs)] = config.r_scale
    return np.diag(np.concatenate([variances, variances]))


def build_filter_model(config: FilterConfig, template: ShearBuildingSpec, measured_dofs: Sequence[int],
                       dt: float, input_dofs: Optional[Sequence[int]] = None,
                       known_values: Optional[np.ndarray] = None) -> FilterModel:
    """Assemble the fixed matrices and masks of a filter run."""
    n = template.n_stories
    measured_dofs = [int(d) for d in measured_dofs]
    if not validate_dof_indices(measured_dofs, n):
        raise InvalidDofError(f"measured_dofs {measured_dofs} must be distinct indices in [0, {n})")

    known_mask = resolve_known_inputs(config, n, input_dofs)
    observed = np.zeros(n, dtype=bool)
    observed[measured_dofs] = True
    residual_rows = known_mask & observed
    if config.estimate_parameters and not np.any(residual_rows):
        logger.warning("No measured DOF has a known input: parameters stay at theta0")

    theta0 = initial_theta(config, template)
    return FilterModel(
        config=config,
        template=template,
        measured_dofs=measured_dofs,
        known_mask=known_mask,
        known_values=np.zeros(n) if known_values is None else np.asarray(known_values, dtype=float),
        Q_d=config.q_scale * np.eye(2 * n),
        R_d=observation_noise(config, measured_dofs, n),
        H=np.eye(2 * n),
        residual_rows=residual_rows,
        dt=float(dt),
        alpha=leak_factor(config.detrend_cutoff_hz, dt),
        theta_floor=config.theta_floor * np.abs(theta0),
    )


def discrete_model(theta: np.ndarray, template: ShearBuildingSpec, dt: float) -> DiscreteStateSpace:
    """A_d, B_d for parameters ``theta`` with an input on every DOF."""
    mats = matrices_from_theta(theta, template)
    return discretize(assemble_state_space(mats, range(template.n_stories)), dt)


def initial_state(model: FilterModel, first_frame: np.ndarray) -> FilterState:
    """State at k = 0: configured z0, P0 = p0_scale I, zero pseudo-measurements."""
    n = model.n
    config = model.config
    z0 = np.zeros(2 * n) if config.z0 is None else np.asarray(config.z0, dtype=float)
    theta0 = initial_theta(config, model.template)

    a_full = np.zeros(n)
    a_full[model.measured_dofs] = first_frame
    u0 = estimate_input(a_full, z0, theta0, model.known_mask, model.template, model.known_values)
    a0 = estimated_accelerations(z0, u0, theta0, model.template)
    return FilterState(
        z=z0,
        P=config.p0_scale * np.eye(2 * n),
        theta=theta0,
        u_est=u0,
        a_est=a0,
        k=0,
        pseudo_disp=np.zeros(n),
        pseudo_vel=np.zeros(n),
        a_prev=a_full,
        dss=discrete_model(theta0, model.template, model.dt),
    )


############################### Recursion ###############################

def rkf_step(state: FilterState, frame: np.ndarray, model: FilterModel) -> FilterState:
    """
    Advance the filter by one sample.

    Unmeasured acceleration channels repeat the previous estimate. Their
    pseudo-measurements carry filled_r_scale, so those states follow the
    model driven by the known inputs.

    Args:
        state: Posterior at step k
        frame: Measured accelerations at step k + 1 (one per measured DOF)
        model: Fixed filter matrices and settings

    Returns:
        Posterior at step k + 1

    Raises:
        DivergenceError: Non-finite state, input or parameters
        NumericalError: Gain or parameter-update failures, annotated with the step
    """
    step = state.k + 1
    config = model.config
    template = model.template

    a_full = state.a_est.copy()
    a_full[model.measured_dofs] = frame

    pseudo_disp, pseudo_vel = trapezoid_step(
        state.pseudo_disp, state.pseudo_vel, state.a_prev, a_full, model.dt, model.alpha
    )
    y = np.concatenate([pseudo_disp, pseudo_vel])

    dss = state.dss if state.dss is not None else discrete_model(state.theta, template, model.dt)
    try:
        z_pred, P_pred = predict(state, dss, model.Q_d)
        J, _ = gain(P_pred, model.H, model.R_d)
    except NumericalError as e:
        e.detail = f"{e.detail} (step {step})"
        raise
    innovation = y - model.H @ z_pred
    z_post, P_post = update_state(z_pred, P_pred, y, model.H, J)

    theta = state.theta
    u_est = estimate_input(a_full, z_post, theta, model.known_mask, template, model.known_values)
    a_est = estimated_accelerations(z_post, u_est, theta, template)
    if not (np.all(np.isfinite(z_post)) and np.all(np.isfinite(u_est))):
        raise DivergenceError("Non-finite filter state", step=step)

    if config.estimate_parameters and np.any(model.residual_rows):
        try:
            theta_new, rho = correct_parameters(theta, z_post, u_est, a_full, model)
        except NumericalError as e:
            e.detail = f"{e.detail} (step {step})"
            raise
        dss_new = discrete_model(theta_new, template, model.dt) if np.any(theta_new != theta) else dss
    else:
        rho = model_residual(a_est, a_full, model.residual_rows, template)
        theta_new = theta
        dss_new = dss

    if not np.all(np.isfinite(theta_new)):
        raise DivergenceError("Non-finite parameter estimate", step=step)

    return replace(
        state,
        z=z_post,
        P=P_post,
        theta=theta_new,
        u_est=u_est,
        a_est=a_est,
        k=step,
        pseudo_disp=pseudo_disp,
        pseudo_vel=pseudo_vel,
        a_prev=a_full,
        dss=dss_new,
        innov_norm=float(np.linalg.norm(innovation)),
        rho_norm=float(np.linalg.norm(rho)),
    )


def run_rkf(measurements: MeasurementSet, config: FilterConfig, template: ShearBuildingSpec,
            input_dofs: Optional[Sequence[int]] = None, sequence_id: Optional[str] = None,
            known_values: Optional[np.ndarray] = None) -> EstimateTrace:
    """
    Run the filter causally over a measured sequence.

    Args:
        measurements: Noisy accelerations of the measured DOFs
        config: Filter settings
        template: Building used for the masses and the default theta0
        input_dofs: Loaded DOFs; the rest are known zero unless config.known_inputs is set
        sequence_id: Label carried into errors and the trace
        known_values: Values of the known inputs (T x n), zero when omitted

    Returns:
        EstimateTrace with one row per sample

    Raises:
        DivergenceError: Non-finite state, with step index and sequence id
    """
    frames = np.asarray(measurements.noisy_accel, dtype=float)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise InvalidLengthError(f"Measurement frames must be a non-empty T x m array, got {frames.shape}")
    n = template.n_stories
    n_samples = frames.shape[0]
    if frames.shape[1] != len(measurements.measured_dofs):
        raise InvalidLengthError(f"Expected {len(measurements.measured_dofs)} measured channels, got {frames.shape[1]}")
    if known_values is not None:
        known_values = np.asarray(known_values, dtype=float)
        if known_values.shape != (n_samples, n):
            raise InvalidLengthError(f"known_values must be {(n_samples, n)}, got {known_values.shape}")

    model = build_filter_model(
        config, template, measurements.measured_dofs, measurements.dt, input_dofs,
        None if known_values is None else known_values[0],
    )

    u_hist = np.empty((n_samples, n))
    theta_hist = np.empty((n_samples, 2 * n))
    z_hist = np.empty((n_samples, 2 * n))
    innov_hist = np.zeros(n_samples)
    rho_hist = np.zeros(n_samples)

    label = sequence_id or "sequence"
    logger.info(f"Running RKF on {label}: {n_samples} steps, measured DOFs {[d + 1 for d in model.measured_dofs]}")

    state = initial_state(model, frames[0])
    u_hist[0], theta_hist[0], z_hist[0] = state.u_est, state.theta, state.z
    try:
        for k in range(1, n_samples):
            if known_values is not None:
                model = replace(model, known_values=known_values[k])
            state = rkf_step(state, frames[k], model)
            u_hist[k] = state.u_est
            theta_hist[k] = state.theta
            z_hist[k] = state.z
            innov_hist[k] = state.innov_norm
            rho_hist[k] = state.rho_norm
    except DivergenceError as e:
        e.sequence_id = sequence_id
        raise

    logger.debug(f"RKF finished {label}: final theta {np.array2string(state.theta, precision=4)}")
    return EstimateTrace(
        time_grid=np.arange(n_samples) * measurements.dt,
        u_est=u_hist,
        theta=theta_hist,
        z=z_hist,
        innov_norm=innov_hist,
        rho_norm=rho_hist,
        sequence_id=sequence_id,
    )
