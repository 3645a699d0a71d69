import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from app.src.structure.matrices import (
    ShearBuildingSpec, SystemMatrices, build_shear_matrices, chain_force, chain_matrix,
    matrices_from_theta, theta_of
)
from app.src.structure.state_space import StateSpace, assemble_state_space, discretize
from app.utils.exceptions import (
    InvalidDofError, InvalidParameterError, InvalidSpecError, InvalidStepError, SingularMassError
)


@st.composite
def building_specs(draw, max_stories=6):
    n = draw(st.integers(min_value=1, max_value=max_stories))
    positive = st.floats(min_value=0.5, max_value=500.0, allow_nan=False)
    values = [draw(st.lists(positive, min_size=n, max_size=n)) for _ in range(3)]
    return ShearBuildingSpec.from_arrays(*values)


############################### build_shear_matrices ###############################

def test_reference_matrices_entries(reference_mats):
    assert reference_mats.K[0, 0] == 1800
    assert reference_mats.K[0, 1] == -900
    assert reference_mats.K[3, 3] == 2400
    assert reference_mats.C[4, 4] == 150
    assert reference_mats.M[5, 5] == 100


def test_single_story_chain():
    mats = build_shear_matrices(ShearBuildingSpec.from_arrays([1.0], [1.0], [1.0]))
    np.testing.assert_array_equal(mats.M, [[1.0]])
    np.testing.assert_array_equal(mats.K, [[1.0]])
    np.testing.assert_array_equal(mats.C, [[1.0]])


def test_two_story_hand_assembly():
    mats = build_shear_matrices(ShearBuildingSpec.from_arrays([1.0, 2.0], [3.0, 5.0], [7.0, 11.0]))
    np.testing.assert_array_equal(mats.M, [[1.0, 0.0], [0.0, 2.0]])
    np.testing.assert_array_equal(mats.K, [[8.0, -5.0], [-5.0, 5.0]])
    np.testing.assert_array_equal(mats.C, [[18.0, -11.0], [-11.0, 11.0]])


@pytest.mark.parametrize("masses, stiffnesses, dampings", [
    ([1.0, -1.0], [1.0, 1.0], [1.0, 1.0]),
    ([1.0, 1.0], [1.0, 0.0], [1.0, 1.0]),
    ([1.0, 1.0], [1.0], [1.0, 1.0]),
])
def test_invalid_spec_rejected(masses, stiffnesses, dampings):
    with pytest.raises(InvalidSpecError):
        build_shear_matrices(ShearBuildingSpec.from_arrays(masses, stiffnesses, dampings))


@given(building_specs())
def test_matrices_symmetric_and_positive_definite(spec):
    mats = build_shear_matrices(spec)
    for mat in (mats.K, mats.C):
        np.testing.assert_allclose(mat, mat.T)
        assert np.all(np.linalg.eigvalsh(mat) > 0)


@given(building_specs(), st.integers(min_value=0, max_value=2 ** 31 - 1))
def test_chain_force_matches_matrix_product(spec, seed):
    x = np.random.default_rng(seed).standard_normal(spec.n_stories)
    k = np.asarray(spec.stiffnesses)
    np.testing.assert_allclose(chain_force(k, x), chain_matrix(k) @ x, rtol=1e-12, atol=1e-9)


############################### assemble_state_space ###############################

def test_scalar_state_space():
    mats = SystemMatrices(M=np.array([[2.0]]), C=np.array([[4.0]]), K=np.array([[8.0]]))
    ss = assemble_state_space(mats, [0])
    np.testing.assert_allclose(ss.A, [[0.0, 1.0], [-4.0, -2.0]])
    np.testing.assert_allclose(ss.B, [[0.0], [0.5]])


def test_zero_restoring_force_is_double_integrator():
    mats = SystemMatrices(M=np.eye(2), C=np.zeros((2, 2)), K=np.zeros((2, 2)))
    ss = assemble_state_space(mats, [0, 1])
    expected = np.block([[np.zeros((2, 2)), np.eye(2)], [np.zeros((2, 2)), np.zeros((2, 2))]])
    np.testing.assert_array_equal(ss.A, expected)


def test_reference_lower_left_block(reference_mats):
    ss = assemble_state_space(reference_mats, [5])
    np.testing.assert_allclose(ss.A[6:, :6], -np.linalg.inv(reference_mats.M) @ reference_mats.K, atol=1e-12)
    assert ss.B.shape == (12, 1)
    assert ss.B[11, 0] == pytest.approx(0.01)


def test_input_dof_out_of_range(reference_mats):
    with pytest.raises(InvalidDofError):
        assemble_state_space(reference_mats, [6])


def test_singular_mass():
    mats = SystemMatrices(M=np.diag([1.0, 0.0]), C=np.eye(2), K=np.eye(2))
    with pytest.raises(SingularMassError):
        assemble_state_space(mats, [0])


@given(building_specs())
def test_passive_structure_is_stable(spec):
    ss = assemble_state_space(build_shear_matrices(spec), range(spec.n_stories))
    assert np.all(np.linalg.eigvals(ss.A).real < 1e-9)


############################### discretize ###############################

def test_zero_dynamics_discretization():
    ss = StateSpace(A=np.zeros((2, 2)), B=np.array([[0.0], [1.0]]), input_dofs=[0])
    dss = discretize(ss, 0.1)
    np.testing.assert_array_equal(dss.A_d, np.eye(2))
    np.testing.assert_allclose(dss.B_d, [[0.0], [0.1]])


def test_scalar_series_against_exponential():
    ss = StateSpace(A=np.array([[-1.0]]), B=np.array([[1.0]]), input_dofs=[0])
    dss = discretize(ss, 0.01)
    assert dss.A_d[0, 0] == pytest.approx(0.99005, abs=1e-12)
    assert abs(dss.A_d[0, 0] - np.exp(-0.01)) < 2e-7


def test_reference_discretization_is_third_order(reference_mats):
    ss = assemble_state_space(reference_mats, range(6))
    dt = 0.01
    dss = discretize(ss, dt)
    a = np.linalg.norm(ss.A, 2) * dt
    bound = a ** 3 / 6.0 * np.exp(a)
    assert np.max(np.abs(dss.A_d - scipy.linalg.expm(ss.A * dt))) <= bound


@pytest.mark.parametrize("dt", [0.0, -0.01, float("nan")])
def test_invalid_step(reference_mats, dt):
    with pytest.raises(InvalidStepError):
        discretize(assemble_state_space(reference_mats, [5]), dt)


############################### matrices_from_theta ###############################

def test_theta_round_trip(reference_spec, reference_mats):
    mats = matrices_from_theta(theta_of(reference_spec), reference_spec)
    for name in ("M", "C", "K"):
        np.testing.assert_array_equal(getattr(mats, name), getattr(reference_mats, name))


def test_scaling_one_stiffness_changes_one_block(reference_spec, reference_mats):
    theta = theta_of(reference_spec)
    theta[3] *= 1.1
    diff = matrices_from_theta(theta, reference_spec).K - reference_mats.K
    changed = np.argwhere(diff != 0)
    assert set(map(tuple, changed)) == {(2, 2), (2, 3), (3, 2), (3, 3)}
    np.testing.assert_array_equal(matrices_from_theta(theta, reference_spec).C, reference_mats.C)


def test_unit_theta_two_stories():
    template = ShearBuildingSpec.from_arrays([1.0, 1.0], [9.0, 9.0], [9.0, 9.0])
    mats = matrices_from_theta(np.ones(4), template)
    np.testing.assert_array_equal(mats.K, [[2.0, -1.0], [-1.0, 1.0]])
    np.testing.assert_array_equal(mats.C, [[2.0, -1.0], [-1.0, 1.0]])


@pytest.mark.parametrize("theta", [np.ones(3), -np.ones(4), np.array([1.0, 1.0, 0.0, 1.0])])
def test_invalid_theta(theta):
    template = ShearBuildingSpec.from_arrays([1.0, 1.0], [1.0, 1.0], [1.0, 1.0])
    with pytest.raises(InvalidParameterError):
        matrices_from_theta(theta, template)
