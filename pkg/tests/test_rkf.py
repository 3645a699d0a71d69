from dataclasses import replace

import numpy as np
import pytest

from app.models.schemas import FilterConfig
from app.src.evaluation.metrics import accumulated_error
from app.src.rkf.filter import (
    FilterState, build_filter_model, correct_parameters, discrete_model, estimate_input, estimated_accelerations,
    initial_state, observation_noise, resolve_known_inputs, rkf_step, run_rkf
)
from app.src.rkf.kalman import gain, predict, update_state
from app.src.rkf.parameters import sensitivity, update_parameters
from app.src.simulation.integrator import integrate_rk4
from app.src.simulation.loads import gen_decaying_harmonic
from app.src.simulation.measurement import MeasurementSet, measure
from app.src.structure.matrices import matrices_from_theta, theta_of
from app.src.structure.state_space import DiscreteStateSpace
from app.utils.exceptions import (
    DivergenceError, IllConditionedInnovationError, InvalidLengthError, InvalidParameterError,
    RegularizationRequiredError, SensitivityFailureError
)


def scalar_state(z: float, p: float, u: float = 0.0) -> FilterState:
    return FilterState(
        z=np.array([z]), P=np.array([[p]]), theta=np.ones(2), u_est=np.array([u]), a_est=np.zeros(1)
    )


@pytest.fixture
def shaker_response(reference_mats):
    load = gen_decaying_harmonic(100.0, 2.0, 0.0, 0.0, 10.0, 0.01, dof=5, n=6)
    return load, integrate_rk4(reference_mats, load)


############################### Kalman primitives ###############################

def test_identity_model_leaves_state_unchanged():
    state = FilterState(z=np.array([1.0, -2.0]), P=np.array([[2.0, 0.5], [0.5, 1.0]]), theta=np.ones(2),
                        u_est=np.array([3.0]), a_est=np.zeros(1))
    dss = DiscreteStateSpace(A_d=np.eye(2), B_d=np.zeros((2, 1)), dt=0.01)
    z_pred, P_pred = predict(state, dss, np.zeros((2, 2)))
    np.testing.assert_array_equal(z_pred, state.z)
    np.testing.assert_array_equal(P_pred, state.P)


def test_scalar_predict():
    dss = DiscreteStateSpace(A_d=np.array([[0.5]]), B_d=np.array([[1.0]]), dt=1.0)
    z_pred, P_pred = predict(scalar_state(2.0, 1.0), dss, np.array([[0.1]]))
    assert z_pred[0] == pytest.approx(1.0)
    assert P_pred[0, 0] == pytest.approx(0.35)


def test_predicted_covariance_stays_psd(reference_spec):
    dss = discrete_model(theta_of(reference_spec), reference_spec, 0.01)
    root = np.random.default_rng(2).standard_normal((12, 12))
    state = FilterState(z=np.zeros(12), P=root @ root.T, theta=theta_of(reference_spec), u_est=np.zeros(6),
                        a_est=np.zeros(6))
    _, P_pred = predict(state, dss, np.eye(12))
    np.testing.assert_allclose(P_pred, P_pred.T)
    assert np.min(np.linalg.eigvalsh(P_pred)) > 0


def test_scalar_gain():
    J, N = gain(np.array([[1.0]]), np.array([[1.0]]), np.array([[1.0]]))
    assert N[0, 0] == pytest.approx(2.0)
    assert J[0, 0] == pytest.approx(0.5)


def test_huge_observation_noise_ignores_measurement():
    J, _ = gain(np.array([[1.0]]), np.array([[1.0]]), np.array([[1e12]]))
    assert np.linalg.norm(J) < 1e-11


def test_tiny_observation_noise_trusts_measurement():
    J, _ = gain(np.eye(2), np.eye(2), 1e-12 * np.eye(2))
    np.testing.assert_allclose(J, np.eye(2), atol=1e-9)


def test_singular_innovation_covariance():
    with pytest.raises(IllConditionedInnovationError) as info:
        gain(np.diag([1.0, 0.0]), np.eye(2), np.zeros((2, 2)))
    assert info.value.exit_code == 3


def test_scalar_update_continues_gain_example():
    J, _ = gain(np.array([[1.0]]), np.array([[1.0]]), np.array([[1.0]]))
    z_post, P_post = update_state(np.array([1.0]), np.array([[1.0]]), np.array([3.0]), np.array([[1.0]]), J)
    assert z_post[0] == pytest.approx(2.0)
    assert P_post[0, 0] == pytest.approx(0.5)


def test_zero_innovation_and_zero_gain():
    z_pred = np.array([1.0, 2.0])
    P_pred = np.eye(2)
    H = np.eye(2)
    z_post, _ = update_state(z_pred, P_pred, H @ z_pred, H, 0.3 * np.eye(2))
    np.testing.assert_array_equal(z_post, z_pred)
    z_post, P_post = update_state(z_pred, P_pred, np.array([5.0, 5.0]), H, np.zeros((2, 2)))
    np.testing.assert_array_equal(z_post, z_pred)
    np.testing.assert_array_equal(P_post, P_pred)


############################### Model relations ###############################

def test_input_recovery_is_exact_for_true_states(reference_spec, shaker_response):
    load, record = shaker_response
    theta = theta_of(reference_spec)
    for k in (150, 600, 999):
        z = np.concatenate([record.displacements[k], record.velocities[k]])
        u = estimate_input(record.accelerations[k], z, theta, np.zeros(6, dtype=bool), reference_spec)
        np.testing.assert_allclose(u, load.forces[k], atol=1e-8 * np.max(np.abs(load.forces)))


def test_zero_state_zero_input(reference_spec):
    u = estimate_input(np.zeros(6), np.zeros(12), theta_of(reference_spec), np.zeros(6, dtype=bool), reference_spec)
    assert not np.any(u)


def test_known_inputs_are_zeroed(reference_spec, shaker_response):
    _, record = shaker_response
    z = np.concatenate([record.displacements[500], record.velocities[500]])
    known = np.array([True] * 5 + [False])
    u = estimate_input(record.accelerations[500] + 1.0, z, theta_of(reference_spec), known, reference_spec)
    assert not np.any(u[:5])
    assert u[5] != 0


def test_accelerations_from_consistent_input(reference_spec, shaker_response):
    load, record = shaker_response
    k = 700
    z = np.concatenate([record.displacements[k], record.velocities[k]])
    a = estimated_accelerations(z, load.forces[k], theta_of(reference_spec), reference_spec)
    np.testing.assert_allclose(a, record.accelerations[k], atol=1e-10)


def test_static_equilibrium_gives_zero_acceleration(reference_spec, reference_mats):
    rng = np.random.default_rng(3)
    y, v = rng.standard_normal(6), rng.standard_normal(6)
    u = reference_mats.K @ y + reference_mats.C @ v
    a = estimated_accelerations(np.concatenate([y, v]), u, theta_of(reference_spec), reference_spec)
    np.testing.assert_allclose(a, 0.0, atol=1e-12)
    assert not np.any(estimated_accelerations(np.zeros(12), np.zeros(6), theta_of(reference_spec), reference_spec))


############################### Parameter correction ###############################

def test_sensitivity_of_constant_prediction():
    U = sensitivity(lambda theta: np.array([4.0, 2.0]), np.array([1.0, 2.0, 3.0]), 1e-6)
    assert U.shape == (2, 3)
    assert not np.any(U)


def test_sensitivity_of_square():
    U = sensitivity(lambda theta: theta ** 2, np.array([3.0]), 1e-4)
    assert U[0, 0] == pytest.approx(-6.0, abs=1e-6)


def test_sensitivity_step_refinement(reference_spec, shaker_response):
    _, record = shaker_response
    k = 400
    z = np.concatenate([record.displacements[k], record.velocities[k]])
    u = np.zeros(6)
    u[5] = 30.0
    theta = theta_of(reference_spec)

    def a_pred(candidate):
        return estimated_accelerations(z, u, candidate, reference_spec)

    coarse = sensitivity(a_pred, theta, 1e-5)
    fine = sensitivity(a_pred, theta, 1e-6)
    np.testing.assert_allclose(coarse, fine, rtol=1e-4, atol=1e-10)


def test_sensitivity_failure():
    def a_pred(theta):
        return np.array([np.nan]) if theta[0] > 1.0 else np.array([0.0])

    with pytest.raises(SensitivityFailureError):
        sensitivity(a_pred, np.array([1.0]), 1e-3)


def test_zero_residual_keeps_parameters():
    theta = np.array([900.0, 25.0])
    np.testing.assert_array_equal(update_parameters(theta, np.ones((1, 2)), np.zeros(1)), theta)


def test_unregularized_scalar_step():
    theta = update_parameters(np.array([2.0]), np.array([[1.0]]), np.array([0.25]), lambda2=0.0, mu=0.0)
    assert theta[0] == pytest.approx(2.25)


def test_large_residual_freezes_parameters():
    theta = np.array([900.0, 25.0])
    updated = update_parameters(theta, np.eye(2), np.array([1e3, 1e3]), lambda2=5e-2, mu=1.0)
    np.testing.assert_allclose(updated, theta, atol=1e-6)


def test_singular_normal_matrix_needs_regularization():
    with pytest.raises(RegularizationRequiredError):
        update_parameters(np.ones(2), np.zeros((1, 2)), np.array([1.0]), lambda2=0.0, mu=0.0)


def test_parameters_clamped_to_floor():
    theta = update_parameters(np.array([1.0]), np.array([[1.0]]), np.array([-10.0]), lambda2=0.0, mu=0.0,
                              floor=0.5)
    assert theta[0] == 0.5


############################### Filter recursion ###############################

def test_known_input_mask_resolution():
    config = FilterConfig()
    np.testing.assert_array_equal(resolve_known_inputs(config, 3, [2]), [True, True, False])
    assert not np.any(resolve_known_inputs(config, 3, None))
    explicit = FilterConfig(known_inputs=[False, True, False])
    np.testing.assert_array_equal(resolve_known_inputs(explicit, 3, [2]), [False, True, False])
    with pytest.raises(InvalidLengthError):
        resolve_known_inputs(explicit, 4, None)


def test_zero_measurements_stay_zero(reference_spec):
    config = FilterConfig(theta0=list(theta_of(reference_spec)))
    model = build_filter_model(config, reference_spec, [2, 4, 5], 0.01, input_dofs=None)
    state = initial_state(model, np.zeros(3))
    for _ in range(20):
        state = rkf_step(state, np.zeros(3), model)
    assert state.k == 20
    assert not np.any(state.z)
    assert not np.any(state.u_est)
    np.testing.assert_array_equal(state.theta, theta_of(reference_spec))


def test_noiseless_input_reconstruction(reference_spec, reference_mats):
    load = gen_decaying_harmonic(100.0, 2.0, 0.0, 0.0, 200.0, 0.01, dof=5, n=6)
    record = integrate_rk4(reference_mats, load)
    measurements = measure(record.accelerations, [2, 4, 5], nsr=0.0, dt=0.01, seed=None)
    config = FilterConfig(theta0=list(theta_of(reference_spec)), estimate_parameters=False, q_scale=1.0,
                          r_scale=1e-10, detrend_cutoff_hz=None)
    trace = run_rkf(measurements, config, reference_spec, input_dofs=[5], sequence_id="noiseless")

    assert len(trace) == load.n_samples
    after = trace.time_grid >= 2.0
    error = trace.u_est[after, 5] - load.forces[after, 5]
    relative_rms = np.sqrt(np.mean(error ** 2)) / np.sqrt(np.mean(load.forces[after, 5] ** 2))
    assert relative_rms < 1e-3
    assert not np.any(trace.u_est[:, :5])
    np.testing.assert_array_equal(trace.theta[-1], theta_of(reference_spec))


def test_joint_estimation_keeps_parameters_positive(reference_spec, shaker_response):
    _, record = shaker_response
    measurements = measure(record.accelerations[:300], [2, 4, 5], nsr=0.05, dt=0.01, seed=12)
    trace = run_rkf(measurements, FilterConfig(), reference_spec, input_dofs=[5])
    assert np.all(np.isfinite(trace.theta))
    assert np.all(trace.theta > 0)
    assert np.all(np.isfinite(trace.u_est))


def test_filter_is_deterministic(reference_spec, shaker_response):
    _, record = shaker_response
    measurements = measure(record.accelerations[:200], [2, 4, 5], nsr=0.05, dt=0.01, seed=3)
    first = run_rkf(measurements, FilterConfig(), reference_spec, input_dofs=[5])
    second = run_rkf(measurements, FilterConfig(), reference_spec, input_dofs=[5])
    np.testing.assert_array_equal(first.u_est, second.u_est)
    np.testing.assert_array_equal(first.theta, second.theta)


@pytest.mark.parametrize("estimate", [False, True])
def test_divergence_names_sequence_and_step(reference_spec, estimate):
    frames = np.zeros((20, 2))
    frames[5] = np.inf
    measurements = MeasurementSet(measured_dofs=[4, 5], noisy_accel=frames, nsr=0.0,
                                  pseudo_disp=np.zeros_like(frames), pseudo_vel=np.zeros_like(frames), dt=0.01)
    config = FilterConfig(estimate_parameters=estimate)
    with pytest.raises(DivergenceError) as info:
        run_rkf(measurements, config, reference_spec, input_dofs=[5], sequence_id="seq_007")
    assert info.value.step == 5
    assert info.value.sequence_id == "seq_007"
    assert "seq_007" in str(info.value)


def test_channel_count_mismatch(reference_spec):
    frames = np.zeros((10, 3))
    measurements = MeasurementSet(measured_dofs=[4, 5], noisy_accel=frames, nsr=0.0,
                                  pseudo_disp=frames, pseudo_vel=frames, dt=0.01)
    with pytest.raises(InvalidLengthError):
        run_rkf(measurements, FilterConfig(), reference_spec, input_dofs=[5])


############################### Force-unit parameter correction ###############################

def all_measured_model(reference_spec, config=None):
    config = config or FilterConfig(detrend_cutoff_hz=None)
    return build_filter_model(config, reference_spec, list(range(6)), 0.01, input_dofs=[5])


def test_filled_channels_carry_large_observation_noise():
    R = observation_noise(FilterConfig(r_scale=1e-10, filled_r_scale=1e6), [2, 3], 4)
    np.testing.assert_array_equal(np.diag(R), [1e6, 1e6, 1e-10, 1e-10, 1e6, 1e6, 1e-10, 1e-10])
    assert not np.any(R - np.diag(np.diag(R)))


def test_residual_rows_are_measured_known_inputs(reference_spec):
    model = build_filter_model(FilterConfig(), reference_spec, [2, 4, 5], 0.01, input_dofs=[5])
    np.testing.assert_array_equal(model.residual_rows, [False, False, True, False, True, False])
    np.testing.assert_array_equal(model.H, np.eye(12))
    np.testing.assert_array_equal(np.diag(model.R_d)[:6], [1e6, 1e6, 1e-10, 1e6, 1e-10, 1e-10])


def test_filled_pseudo_measurement_barely_moves_state(reference_spec):
    config = FilterConfig(theta0=list(theta_of(reference_spec)), estimate_parameters=False)
    model = build_filter_model(config, reference_spec, [2, 4, 5], 0.01, input_dofs=[5])
    state = initial_state(model, np.zeros(3))
    corrupted = np.zeros(6)
    corrupted[0] = 5.0
    state = rkf_step(replace(state, pseudo_disp=corrupted), np.zeros(3), model)
    assert abs(state.z[0]) < 1e-4


def test_residual_is_restoring_force_mismatch(reference_spec, reference_mats):
    model = all_measured_model(reference_spec)
    rng = np.random.default_rng(8)
    z = 0.1 * rng.standard_normal(12)
    u = np.zeros(6)
    a_true = estimated_accelerations(z, u, theta_of(reference_spec), reference_spec)
    theta = 1.3 * theta_of(reference_spec)

    _, rho = correct_parameters(theta, z, u, a_true, model)

    offset = matrices_from_theta(theta, reference_spec)
    expected = (reference_mats.K - offset.K) @ z[:6] + (reference_mats.C - offset.C) @ z[6:]
    np.testing.assert_allclose(rho, expected[:5], rtol=1e-9, atol=1e-9)


def test_parameter_correction_recovers_true_parameters(reference_spec):
    model = all_measured_model(reference_spec)
    truth = theta_of(reference_spec)
    theta = 1.3 * truth
    u = np.zeros(6)
    rng = np.random.default_rng(21)
    for _ in range(3000):
        z = 0.1 * rng.standard_normal(12)
        a_true = estimated_accelerations(z, u, truth, reference_spec)
        theta, _ = correct_parameters(theta, z, u, a_true, model)
    assert np.linalg.norm(theta - truth) < 1e-6 * np.linalg.norm(truth)


def test_parameter_correction_never_moves_away_from_truth(reference_spec):
    model = all_measured_model(reference_spec)
    truth = theta_of(reference_spec)
    theta = truth * np.array([1.3, 0.8, 1.2, 1.1, 0.9, 1.25, 1.3, 0.7, 1.2, 1.4, 0.9, 1.1])
    u = np.zeros(6)
    rng = np.random.default_rng(5)
    distance = np.linalg.norm(theta - truth)
    for _ in range(200):
        z = rng.standard_normal(12)
        theta, _ = correct_parameters(theta, z, u, estimated_accelerations(z, u, truth, reference_spec), model)
        new_distance = np.linalg.norm(theta - truth)
        assert new_distance <= distance * (1 + 1e-9)
        distance = new_distance


def test_joint_estimation_moves_parameters_toward_truth(reference_spec, reference_mats):
    loads = [gen_decaying_harmonic(100.0, omega, 0.0, 0.0, 30.0, 0.01, dof=5, n=6) for omega in (1.5, 4.5, 9.0)]
    load = replace(loads[0], forces=sum(item.forces for item in loads))
    record = integrate_rk4(reference_mats, load)
    measurements = measure(record.accelerations, list(range(6)), nsr=0.0, dt=0.01, seed=None)
    config = FilterConfig(detrend_cutoff_hz=None)
    trace = run_rkf(measurements, config, reference_spec, input_dofs=[5])

    truth = theta_of(reference_spec)
    initial = np.linalg.norm(trace.theta[0] - truth)
    final = np.linalg.norm(trace.theta[-1] - truth)
    assert initial == pytest.approx(0.3 * np.linalg.norm(truth))
    assert final < 0.5 * initial
    assert np.all(trace.rho_norm >= 0)


def test_no_residual_rows_leaves_parameters(reference_spec, shaker_response):
    _, record = shaker_response
    measurements = measure(record.accelerations[:100], [5], nsr=0.05, dt=0.01, seed=2)
    trace = run_rkf(measurements, FilterConfig(), reference_spec, input_dofs=[5])
    np.testing.assert_array_equal(trace.theta[-1], trace.theta[0])


def test_non_positive_fd_step_is_a_parameter_error():
    with pytest.raises(InvalidParameterError) as info:
        sensitivity(lambda theta: theta, np.ones(2), 0.0)
    assert info.value.exit_code == 2


############################### Drift and recursion properties ###############################

def test_detrending_bounds_state_drift_from_sensor_noise(reference_spec):
    frames = 0.05 * np.random.default_rng(13).standard_normal((6000, 3))
    measurements = MeasurementSet(measured_dofs=[2, 4, 5], noisy_accel=frames, nsr=0.05,
                                  pseudo_disp=np.zeros_like(frames), pseudo_vel=np.zeros_like(frames), dt=0.01)
    drift = {}
    for cutoff in (None, 0.05):
        config = FilterConfig(theta0=list(theta_of(reference_spec)), estimate_parameters=False,
                              detrend_cutoff_hz=cutoff)
        trace = run_rkf(measurements, config, reference_spec, input_dofs=[5])
        drift[cutoff] = np.sqrt(np.mean(trace.z[3000:, [2, 4, 5]] ** 2))
    assert drift[0.05] < 0.2 * drift[None]


def test_filter_is_causal(reference_spec, shaker_response):
    _, record = shaker_response
    full = measure(record.accelerations[:400], [2, 4, 5], nsr=0.05, dt=0.01, seed=9)
    prefix = replace(full, noisy_accel=full.noisy_accel[:250], pseudo_disp=full.pseudo_disp[:250],
                     pseudo_vel=full.pseudo_vel[:250])
    long_trace = run_rkf(full, FilterConfig(), reference_spec, input_dofs=[5])
    short_trace = run_rkf(prefix, FilterConfig(), reference_spec, input_dofs=[5])
    np.testing.assert_array_equal(short_trace.u_est, long_trace.u_est[:250])
    np.testing.assert_array_equal(short_trace.theta, long_trace.theta[:250])
    np.testing.assert_array_equal(short_trace.z, long_trace.z[:250])


def test_posterior_covariance_symmetric_psd_every_step(reference_spec, shaker_response):
    _, record = shaker_response
    measurements = measure(record.accelerations[:300], [2, 4, 5], nsr=0.05, dt=0.01, seed=4)
    model = build_filter_model(FilterConfig(), reference_spec, measurements.measured_dofs, 0.01, input_dofs=[5])
    state = initial_state(model, measurements.noisy_accel[0])
    for frame in measurements.noisy_accel[1:]:
        state = rkf_step(state, frame, model)
        np.testing.assert_array_equal(state.P, state.P.T)
        eigenvalues = np.linalg.eigvalsh(state.P)
        assert eigenvalues[0] >= -1e-9 * max(1.0, eigenvalues[-1])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_step_shrinks_with_mu(seed):
    rng = np.random.default_rng(seed)
    theta = np.abs(rng.standard_normal(4)) + 1.0
    U = rng.standard_normal((3, 4))
    rho = rng.standard_normal(3)
    norms = [np.linalg.norm(update_parameters(theta, U, rho, lambda2=5e-2, mu=mu) - theta)
             for mu in (0.0, 1e-3, 5e-3, 1e-2, 0.1, 1.0)]
    assert all(later <= earlier for earlier, later in zip(norms, norms[1:]))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_step_vanishes_with_heavy_regularization(seed):
    rng = np.random.default_rng(seed)
    theta = np.abs(rng.standard_normal(4)) + 1.0
    U = rng.standard_normal((3, 4))
    rho = rng.standard_normal(3)
    norms = [np.linalg.norm(update_parameters(theta, U, rho, lambda2=lambda2, mu=0.0) - theta)
             for lambda2 in (1e-2, 1.0, 1e2, 1e4, 1e12)]
    assert all(later <= earlier for earlier, later in zip(norms, norms[1:]))
    assert norms[-1] < 1e-10


def test_error_grows_with_noise_on_matched_seeds(reference_spec, shaker_response):
    load, record = shaker_response
    config = FilterConfig(theta0=list(theta_of(reference_spec)), estimate_parameters=False, detrend_cutoff_hz=None)
    finals = []
    for nsr in (0.05, 0.10, 0.15, 0.20):
        measurements = measure(record.accelerations, [2, 4, 5], nsr=nsr, dt=0.01, seed=17)
        trace = run_rkf(measurements, config, reference_spec, input_dofs=[5])
        finals.append(accumulated_error(trace.u_est[:, 5], load.forces[:, 5]).final)
    assert all(later >= earlier for earlier, later in zip(finals, finals[1:]))
    assert finals[-1] > finals[0]
