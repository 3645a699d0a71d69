"""
The sequence-to-sequence stack: (cell -> ReLU -> dropout) x layer_pairs ->
dense + ReLU -> linear dense output. The convolutional variant has no dropout.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.models.schemas import NetworkConfig
from app.src.nets.layers import (
    ParamsMixin, LSTMParams, GRUParams, Conv1dParams, DenseParams, SeedLike,
    init_lstm, init_gru, init_conv1d, init_dense,
    lstm_forward, lstm_backward, gru_forward, gru_backward,
    conv1d_forward, conv1d_backward, dense_forward, dense_backward,
    relu_forward, relu_backward, dropout_forward, dropout_backward, mse_loss,
)
from app.utils.exceptions import ShapeError

logger = logging.getLogger(__name__)

# Ordered layer name -> parameter container
NetworkParams = Dict[str, ParamsMixin]
Tape = List[Tuple[str, str, object]]


def layer_names(config: NetworkConfig) -> List[str]:
    return [f"cell{i + 1}" for i in range(config.layer_pairs)] + ["dense", "output"]


def init_params(config: NetworkConfig, n_inputs: int, n_outputs: int, rng: np.random.Generator) -> NetworkParams:
    """Glorot-uniform weights and zero biases for the whole stack."""
    params: NetworkParams = {}
    width = n_inputs
    for name in layer_names(config)[:-2]:
        if config.cell == "lstm":
            params[name] = init_lstm(rng, width, config.units)
        elif config.cell == "gru":
            params[name] = init_gru(rng, width, config.units)
        else:
            params[name] = init_conv1d(rng, width, config.units, config.kernel_size)
        width = config.units
    params["dense"] = init_dense(rng, width, config.dense_units)
    params["output"] = init_dense(rng, config.dense_units, n_outputs)
    return params


def named_arrays(params: NetworkParams) -> Dict[str, np.ndarray]:
    """Flat 'layer.field' view of the parameter arrays (same objects, not copies)."""
    return {
        f"{layer}.{field}": value
        for layer, container in params.items()
        for field, value in container.arrays().items()
    }


def copy_params(params: NetworkParams) -> NetworkParams:
    return {name: container.copy() for name, container in params.items()}


def zero_grads(params: NetworkParams) -> NetworkParams:
    return {name: container.zeros_like() for name, container in params.items()}


def input_width(params: NetworkParams) -> int:
    return next(iter(params.values())).input_width


def _check_width(name: str, x: np.ndarray, container: ParamsMixin) -> None:
    if x.shape[-1] != container.input_width:
        raise ShapeError(f"Layer {name} expects {container.input_width} input channels, got {x.shape[-1]}")


def network_forward(config: NetworkConfig, params: NetworkParams, x: np.ndarray,
                    training: bool = False, seed: SeedLike = None) -> Tuple[np.ndarray, Tape]:
    """
    Map a measurement sequence to a load sequence.

    Args:
        config: Network settings (cell kind, dropout rate)
        params: Network parameters
        x: (T, C) sequence or (B, T, C) batch
        training: Enables dropout
        seed: Seed or generator for the dropout masks

    Returns:
        (prediction shaped like x with C replaced by the output width, tape for network_backward)

    Raises:
        ShapeError: Channel count does not match a layer
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3:
        raise ShapeError(f"Network input must be (T, C) or (B, T, C), got shape {x.shape}")

    rng = np.random.default_rng(seed) if training and config.dropout > 0 else None
    tape: Tape = []
    h = x
    for name in layer_names(config)[:-2]:
        container = params[name]
        _check_width(name, h, container)
        if config.cell == "lstm":
            h, cache = lstm_forward(h, container)
        elif config.cell == "gru":
            h, cache = gru_forward(h, container)
        else:
            h, cache = conv1d_forward(h, container)
        tape.append((name, config.cell, cache))

        h, positive = relu_forward(h)
        tape.append((name, "relu", positive))
        if config.cell != "conv":
            h, mask = dropout_forward(h, config.dropout, training, rng)
            tape.append((name, "dropout", mask))

    for name, activation in (("dense", "relu"), ("output", "linear")):
        container = params[name]
        _check_width(name, h, container)
        h, cache = dense_forward(h, container.weights, container.bias, activation)
        tape.append((name, "dense", cache))

    return (h[0] if single else h), tape


def network_backward(params: NetworkParams, tape: Tape, d_output: np.ndarray) -> NetworkParams:
    """Replay the tape in reverse and return gradients for every parameter."""
    grads: NetworkParams = {}
    d = np.asarray(d_output, dtype=float)
    if d.ndim == 2:
        d = d[None]
    for name, kind, cache in reversed(tape):
        if kind == "dense":
            d, grads[name] = dense_backward(d, cache, params[name])
        elif kind == "relu":
            d = relu_backward(d, cache)
        elif kind == "dropout":
            d = dropout_backward(d, cache)
        elif kind == "lstm":
            d, grads[name] = lstm_backward(d, cache, params[name])
        elif kind == "gru":
            d, grads[name] = gru_backward(d, cache, params[name])
        else:
            d, grads[name] = conv1d_backward(d, cache, params[name])
    return {name: grads[name] for name in params}


def loss_and_gradients(config: NetworkConfig, params: NetworkParams, x: np.ndarray, y_true: np.ndarray,
                       training: bool = True, seed: SeedLike = None) -> Tuple[float, NetworkParams]:
    """MSE of one batch (or sequence) and its gradients."""
    pred, tape = network_forward(config, params, x, training=training, seed=seed)
    loss, d_pred = mse_loss(pred, y_true)
    return loss, network_backward(params, tape, d_pred)


def predict_load(params: NetworkParams, config: NetworkConfig, x: np.ndarray,
                 normalizer: Optional["Normalizer"] = None) -> np.ndarray:
    """Inference pass (dropout off), mapped back to physical units when a normalizer is given."""
    x = np.asarray(x, dtype=float)
    if normalizer is not None:
        x = normalizer.normalize_inputs(x)
    y, _ = network_forward(config, params, x, training=False)
    return normalizer.denormalize_outputs(y) if normalizer is not None else y


class Normalizer:
    """Per-channel z-score constants fitted on training sequences."""

    def __init__(self, x_mean: np.ndarray, x_std: np.ndarray, y_mean: np.ndarray, y_std: np.ndarray):
        self.x_mean = np.asarray(x_mean, dtype=float)
        self.x_std = np.asarray(x_std, dtype=float)
        self.y_mean = np.asarray(y_mean, dtype=float)
        self.y_std = np.asarray(y_std, dtype=float)

    @staticmethod
    def _moments(sequences: List[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        stacked = np.concatenate([np.asarray(s, dtype=float) for s in sequences], axis=0)
        mean = stacked.mean(axis=0)
        std = stacked.std(axis=0)
        std[std == 0] = 1.0
        return mean, std

    @classmethod
    def fit(cls, inputs: List[np.ndarray], targets: List[np.ndarray]) -> "Normalizer":
        x_mean, x_std = cls._moments(inputs)
        y_mean, y_std = cls._moments(targets)
        return cls(x_mean, x_std, y_mean, y_std)

    @classmethod
    def identity(cls, n_inputs: int, n_outputs: int) -> "Normalizer":
        return cls(np.zeros(n_inputs), np.ones(n_inputs), np.zeros(n_outputs), np.ones(n_outputs))

    def normalize_inputs(self, x: np.ndarray) -> np.ndarray:
        return (x - self.x_mean) / self.x_std

    def normalize_outputs(self, y: np.ndarray) -> np.ndarray:
        return (y - self.y_mean) / self.y_std

    def denormalize_outputs(self, y: np.ndarray) -> np.ndarray:
        return y * self.y_std + self.y_mean

    def to_dict(self) -> Dict[str, List[float]]:
        return {
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
            "y_mean": self.y_mean.tolist(),
            "y_std": self.y_std.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, List[float]]) -> "Normalizer":
        return cls(data["x_mean"], data["x_std"], data["y_mean"], data["y_std"])
