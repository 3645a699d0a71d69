import numpy as np
import pytest

from app.models.schemas import NetworkConfig
from app.src.nets.layers import (
    DenseParams, conv1d_backward, conv1d_forward, dense_backward, dense_forward, gru_backward, gru_forward,
    init_conv1d, init_dense, init_gru, init_lstm, lstm_backward, lstm_forward, mse_loss
)
from app.src.nets.network import init_params, loss_and_gradients, named_arrays, network_forward
from app.src.nets.optimizer import AdamState, adam_step

EPS = 1e-6
TOLERANCE = 1e-5


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    # absolute floor for vanishing gradients
    return float(np.max(np.abs(analytic - numeric) / (np.abs(analytic) + np.abs(numeric) + 1e-3)))


def numeric_gradient(loss_fn, array: np.ndarray) -> np.ndarray:
    """Central differences of loss_fn() with respect to ``array``, perturbed in place."""
    grad = np.zeros_like(array)
    for index in np.ndindex(array.shape):
        original = array[index]
        array[index] = original + EPS
        plus = loss_fn()
        array[index] = original - EPS
        minus = loss_fn()
        array[index] = original
        grad[index] = (plus - minus) / (2.0 * EPS)
    return grad


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def check_layer(forward, backward, params, x, rng):
    """Gradient check for loss = sum(out * weights) of a single layer."""
    out, _ = forward(x, params)
    weights = rng.standard_normal(out.shape)

    def loss() -> float:
        return float(np.sum(forward(x, params)[0] * weights))

    _, cache = forward(x, params)
    dx, grads = backward(weights, cache, params)
    assert relative_error(dx, numeric_gradient(loss, x)) < TOLERANCE
    for name, value in params.arrays().items():
        analytic = grads.arrays()[name]
        assert analytic.shape == value.shape
        assert relative_error(analytic, numeric_gradient(loss, value)) < TOLERANCE, name


############################### Layer gradients ###############################

def test_lstm_gradients(rng):
    x = rng.standard_normal((2, 4, 2))
    params = init_lstm(rng, 2, 3)
    for value in params.arrays().values():
        value += 0.1 * rng.standard_normal(value.shape)
    check_layer(lstm_forward, lstm_backward, params, x, rng)


def test_gru_gradients(rng):
    x = rng.standard_normal((2, 4, 2))
    params = init_gru(rng, 2, 3)
    for value in params.arrays().values():
        value += 0.1 * rng.standard_normal(value.shape)
    check_layer(gru_forward, gru_backward, params, x, rng)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_conv_gradients(rng, m):
    x = rng.standard_normal((2, 5, 2))
    params = init_conv1d(rng, 2, 3, m)
    params.biases[:] = rng.standard_normal(3)
    check_layer(conv1d_forward, conv1d_backward, params, x, rng)


def test_conv_relu_gradients(rng):
    x = rng.standard_normal((2, 5, 2))
    params = init_conv1d(rng, 2, 3, 3)
    check_layer(lambda x, p: conv1d_forward(x, p, activation="relu"), conv1d_backward, params, x, rng)


@pytest.mark.parametrize("activation", ["linear", "relu"])
def test_dense_gradients(rng, activation):
    x = rng.standard_normal((2, 4, 3))
    params = init_dense(rng, 3, 2)
    params.bias[:] = rng.standard_normal(2)

    def forward(x: np.ndarray, p: DenseParams):
        return dense_forward(x, p.weights, p.bias, activation)

    check_layer(forward, dense_backward, params, x, rng)


############################### Full stack ###############################

@pytest.mark.parametrize("cell, pairs", [("lstm", 2), ("gru", 2), ("conv", 2), ("lstm", 1)])
def test_network_gradients(rng, cell, pairs):
    config = NetworkConfig(cell=cell, units=3, dense_units=4, kernel_size=3, dropout=0.3, layer_pairs=pairs)
    params = init_params(config, 2, 1, rng)
    x = rng.standard_normal((2, 4, 2))
    y = rng.standard_normal((2, 4, 1))

    # fixed dropout masks through the seed
    def loss() -> float:
        pred, _ = network_forward(config, params, x, training=True, seed=17)
        return mse_loss(pred, y)[0]

    _, grads = loss_and_gradients(config, params, x, y, training=True, seed=17)
    grad_arrays = named_arrays(grads)
    for name, value in named_arrays(params).items():
        assert relative_error(grad_arrays[name], numeric_gradient(loss, value)) < TOLERANCE, name


def test_single_sequence_matches_batch_of_one(rng):
    config = NetworkConfig(cell="gru", units=3, dense_units=4)
    params = init_params(config, 2, 1, rng)
    x = rng.standard_normal((6, 2))
    single, _ = network_forward(config, params, x)
    batched, _ = network_forward(config, params, x[None])
    assert single.shape == (6, 1)
    np.testing.assert_array_equal(single, batched[0])


############################### Adam ###############################

def test_adam_zero_gradient_keeps_parameters():
    params = {"dense": DenseParams(weights=np.ones((2, 2)), bias=np.ones(2))}
    grads = {"dense": params["dense"].zeros_like()}
    state = adam_step(params, grads, AdamState(), lr=1e-2)
    assert state.t == 1
    np.testing.assert_array_equal(params["dense"].weights, np.ones((2, 2)))
    np.testing.assert_array_equal(params["dense"].bias, np.ones(2))


def test_adam_first_step_moves_by_learning_rate():
    params = {"dense": DenseParams(weights=np.zeros((1, 3)), bias=np.zeros(1))}
    grads = {"dense": DenseParams(weights=np.array([[0.5, -2.0, 1e-3]]), bias=np.array([4.0]))}
    adam_step(params, grads, AdamState(), lr=1e-3)
    np.testing.assert_allclose(params["dense"].weights, [[-1e-3, 1e-3, -1e-3]], rtol=1e-4)
    np.testing.assert_allclose(params["dense"].bias, [-1e-3], rtol=1e-6)


def test_adam_state_keys_are_flat_names():
    params = {"dense": DenseParams(weights=np.zeros((1, 1)), bias=np.zeros(1))}
    state = adam_step(params, {"dense": DenseParams(weights=np.ones((1, 1)), bias=np.ones(1))}, AdamState())
    assert sorted(state.m) == ["dense.bias", "dense.weights"]
