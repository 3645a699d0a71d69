"""
Layer primitives with hand-written reverse-mode gradients.

Sequences are time-major: a batch is (B, T, C). Each ``*_forward`` returns
the output and a cache; the matching ``*_backward`` turns the output
gradient plus cache into input and parameter gradients.
"""

import logging
from dataclasses import dataclass, fields
from typing import Dict, Optional, Tuple, Union

import numpy as np
import scipy.special
from numpy.lib.stride_tricks import sliding_window_view

from app.utils.exceptions import InvalidLengthError

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.Generator]


############################### Parameter containers ###############################

class ParamsMixin:
    """Named-array access shared by every parameter container."""

    def arrays(self) -> Dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def zeros_like(self):
        return type(self)(**{name: np.zeros_like(value) for name, value in self.arrays().items()})

    def copy(self):
        return type(self)(**{name: value.copy() for name, value in self.arrays().items()})


@dataclass(eq=False)
class LSTMParams(ParamsMixin):
    W_f: np.ndarray
    W_i: np.ndarray
    W_o: np.ndarray
    W_c: np.ndarray
    U_f: np.ndarray
    U_i: np.ndarray
    U_o: np.ndarray
    U_c: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    @property
    def units(self) -> int:
        return self.W_f.shape[0]

    @property
    def input_width(self) -> int:
        return self.W_f.shape[1]


@dataclass(eq=False)
class GRUParams(ParamsMixin):
    """W_* are h x (h + d) and act on the concatenation [h_prev, x]."""
    W_z: np.ndarray
    W_r: np.ndarray
    W_h: np.ndarray
    b_z: np.ndarray
    b_r: np.ndarray
    b_h: np.ndarray

    @property
    def units(self) -> int:
        return self.W_z.shape[0]

    @property
    def input_width(self) -> int:
        return self.W_z.shape[1] - self.W_z.shape[0]


@dataclass(eq=False)
class Conv1dParams(ParamsMixin):
    """kernels is (out_channels, in_channels, m)."""
    kernels: np.ndarray
    biases: np.ndarray

    @property
    def units(self) -> int:
        return self.kernels.shape[0]

    @property
    def input_width(self) -> int:
        return self.kernels.shape[1]


@dataclass(eq=False)
class DenseParams(ParamsMixin):
    """weights is (out, in)."""
    weights: np.ndarray
    bias: np.ndarray

    @property
    def units(self) -> int:
        return self.weights.shape[0]

    @property
    def input_width(self) -> int:
        return self.weights.shape[1]


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_lstm(rng: np.random.Generator, d: int, h: int) -> LSTMParams:
    W = {f"W_{g}": glorot_uniform(rng, (h, d), d, h) for g in "fioc"}
    U = {f"U_{g}": glorot_uniform(rng, (h, h), h, h) for g in "fioc"}
    b = {f"b_{g}": np.zeros(h) for g in "fioc"}
    return LSTMParams(**W, **U, **b)


def init_gru(rng: np.random.Generator, d: int, h: int) -> GRUParams:
    W = {f"W_{g}": glorot_uniform(rng, (h, h + d), h + d, h) for g in "zrh"}
    b = {f"b_{g}": np.zeros(h) for g in "zrh"}
    return GRUParams(**W, **b)


def init_conv1d(rng: np.random.Generator, d: int, h: int, m: int) -> Conv1dParams:
    return Conv1dParams(kernels=glorot_uniform(rng, (h, d, m), d * m, h * m), biases=np.zeros(h))


def init_dense(rng: np.random.Generator, d: int, h: int) -> DenseParams:
    return DenseParams(weights=glorot_uniform(rng, (h, d), d, h), bias=np.zeros(h))


############################### Activations ###############################

def sigmoid(x: np.ndarray) -> np.ndarray:
    return scipy.special.expit(x)


def relu_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    positive = x > 0
    return np.where(positive, x, 0.0), positive


def relu_backward(dy: np.ndarray, positive: np.ndarray) -> np.ndarray:
    return np.where(positive, dy, 0.0)


############################### LSTM ###############################

def lstm_cell_forward(x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray,
                      p: LSTMParams) -> Tuple[np.ndarray, np.ndarray]:
    """One LSTM step (logistic gates, tanh candidate and output squashing)."""
    f = sigmoid(x_t @ p.W_f.T + h_prev @ p.U_f.T + p.b_f)
    i = sigmoid(x_t @ p.W_i.T + h_prev @ p.U_i.T + p.b_i)
    o = sigmoid(x_t @ p.W_o.T + h_prev @ p.U_o.T + p.b_o)
    c_tilde = np.tanh(x_t @ p.W_c.T + h_prev @ p.U_c.T + p.b_c)
    c_t = f * c_prev + i * c_tilde
    h_t = o * np.tanh(c_t)
    return h_t, c_t


def lstm_forward(x: np.ndarray, p: LSTMParams) -> Tuple[np.ndarray, dict]:
    """Run an LSTM over a (B, T, d) batch from zero initial state; returns (B, T, h)."""
    B, T, _ = x.shape
    h = p.units
    W = np.concatenate([p.W_f, p.W_i, p.W_o, p.W_c])
    U = np.concatenate([p.U_f, p.U_i, p.U_o, p.U_c])
    b = np.concatenate([p.b_f, p.b_i, p.b_o, p.b_c])
    projected = x @ W.T + b

    gates = np.empty((B, T, 4 * h))
    cells = np.empty((B, T, h))
    hidden = np.empty((B, T, h))
    h_t = np.zeros((B, h))
    c_t = np.zeros((B, h))
    for t in range(T):
        pre = projected[:, t] + h_t @ U.T
        g = np.empty_like(pre)
        g[:, :3 * h] = sigmoid(pre[:, :3 * h])
        g[:, 3 * h:] = np.tanh(pre[:, 3 * h:])
        c_t = g[:, :h] * c_t + g[:, h:2 * h] * g[:, 3 * h:]
        h_t = g[:, 2 * h:3 * h] * np.tanh(c_t)
        gates[:, t] = g
        cells[:, t] = c_t
        hidden[:, t] = h_t
    cache = {"x": x, "W": W, "U": U, "gates": gates, "cells": cells, "hidden": hidden}
    return hidden, cache


def lstm_backward(d_hidden: np.ndarray, cache: dict, p: LSTMParams) -> Tuple[np.ndarray, LSTMParams]:
    """Backpropagation through time for lstm_forward."""
    x, W, U = cache["x"], cache["W"], cache["U"]
    gates, cells, hidden = cache["gates"], cache["cells"], cache["hidden"]
    B, T, _ = x.shape
    h = p.units

    d_pre = np.empty((B, T, 4 * h))
    dU = np.zeros_like(U)
    dh_next = np.zeros((B, h))
    dc_next = np.zeros((B, h))
    for t in reversed(range(T)):
        g = gates[:, t]
        f, i, o, c_tilde = g[:, :h], g[:, h:2 * h], g[:, 2 * h:3 * h], g[:, 3 * h:]
        c_prev = cells[:, t - 1] if t > 0 else np.zeros((B, h))
        h_prev = hidden[:, t - 1] if t > 0 else np.zeros((B, h))
        tanh_c = np.tanh(cells[:, t])

        dh = d_hidden[:, t] + dh_next
        do = dh * tanh_c
        dc = dc_next + dh * o * (1.0 - tanh_c ** 2)
        df = dc * c_prev
        di = dc * c_tilde
        dc_tilde = dc * i
        dc_next = dc * f

        dg = np.concatenate([
            df * f * (1.0 - f),
            di * i * (1.0 - i),
            do * o * (1.0 - o),
            dc_tilde * (1.0 - c_tilde ** 2),
        ], axis=1)
        d_pre[:, t] = dg
        dU += dg.T @ h_prev
        dh_next = dg @ U

    dW = np.einsum("btg,btd->gd", d_pre, x)
    db = d_pre.sum(axis=(0, 1))
    dx = d_pre @ W

    grads = LSTMParams(
        W_f=dW[:h], W_i=dW[h:2 * h], W_o=dW[2 * h:3 * h], W_c=dW[3 * h:],
        U_f=dU[:h], U_i=dU[h:2 * h], U_o=dU[2 * h:3 * h], U_c=dU[3 * h:],
        b_f=db[:h], b_i=db[h:2 * h], b_o=db[2 * h:3 * h], b_c=db[3 * h:],
    )
    return dx, grads


############################### GRU ###############################

def gru_cell_forward(x_t: np.ndarray, h_prev: np.ndarray, p: GRUParams) -> np.ndarray:
    """One GRU step: update/reset gates, candidate on r * h_prev, convex combination."""
    hx = np.concatenate([h_prev, x_t], axis=-1)
    z = sigmoid(hx @ p.W_z.T + p.b_z)
    r = sigmoid(hx @ p.W_r.T + p.b_r)
    candidate = np.tanh(np.concatenate([r * h_prev, x_t], axis=-1) @ p.W_h.T + p.b_h)
    return (1.0 - z) * h_prev + z * candidate


def gru_forward(x: np.ndarray, p: GRUParams) -> Tuple[np.ndarray, dict]:
    """Run a GRU over a (B, T, d) batch from zero initial state; returns (B, T, h)."""
    B, T, _ = x.shape
    h = p.units
    Wz_h, Wz_x = p.W_z[:, :h], p.W_z[:, h:]
    Wr_h, Wr_x = p.W_r[:, :h], p.W_r[:, h:]
    Wh_h, Wh_x = p.W_h[:, :h], p.W_h[:, h:]
    xz = x @ Wz_x.T + p.b_z
    xr = x @ Wr_x.T + p.b_r
    xh = x @ Wh_x.T + p.b_h

    z_all = np.empty((B, T, h))
    r_all = np.empty((B, T, h))
    cand_all = np.empty((B, T, h))
    hidden = np.empty((B, T, h))
    h_t = np.zeros((B, h))
    for t in range(T):
        z = sigmoid(xz[:, t] + h_t @ Wz_h.T)
        r = sigmoid(xr[:, t] + h_t @ Wr_h.T)
        cand = np.tanh(xh[:, t] + (r * h_t) @ Wh_h.T)
        h_t = (1.0 - z) * h_t + z * cand
        z_all[:, t], r_all[:, t], cand_all[:, t], hidden[:, t] = z, r, cand, h_t
    cache = {"x": x, "z": z_all, "r": r_all, "cand": cand_all, "hidden": hidden}
    return hidden, cache


def gru_backward(d_hidden: np.ndarray, cache: dict, p: GRUParams) -> Tuple[np.ndarray, GRUParams]:
    """Backpropagation through time for gru_forward."""
    x = cache["x"]
    z_all, r_all, cand_all, hidden = cache["z"], cache["r"], cache["cand"], cache["hidden"]
    B, T, _ = x.shape
    h = p.units
    Wz_h, Wr_h, Wh_h = p.W_z[:, :h], p.W_r[:, :h], p.W_h[:, :h]

    da_z_all = np.empty((B, T, h))
    da_r_all = np.empty((B, T, h))
    da_h_all = np.empty((B, T, h))
    dWz_h = np.zeros((h, h))
    dWr_h = np.zeros((h, h))
    dWh_h = np.zeros((h, h))
    dh_next = np.zeros((B, h))
    for t in reversed(range(T)):
        z, r, cand = z_all[:, t], r_all[:, t], cand_all[:, t]
        h_prev = hidden[:, t - 1] if t > 0 else np.zeros((B, h))

        dh = d_hidden[:, t] + dh_next
        dz = dh * (cand - h_prev)
        dh_prev = dh * (1.0 - z)

        da_h = dh * z * (1.0 - cand ** 2)
        dWh_h += da_h.T @ (r * h_prev)
        d_rh = da_h @ Wh_h
        dh_prev += d_rh * r

        da_r = d_rh * h_prev * r * (1.0 - r)
        dWr_h += da_r.T @ h_prev
        dh_prev += da_r @ Wr_h

        da_z = dz * z * (1.0 - z)
        dWz_h += da_z.T @ h_prev
        dh_prev += da_z @ Wz_h

        da_z_all[:, t], da_r_all[:, t], da_h_all[:, t] = da_z, da_r, da_h
        dh_next = dh_prev

    def input_part(da: np.ndarray) -> np.ndarray:
        return np.einsum("bth,btd->hd", da, x)

    grads = GRUParams(
        W_z=np.hstack([dWz_h, input_part(da_z_all)]),
        W_r=np.hstack([dWr_h, input_part(da_r_all)]),
        W_h=np.hstack([dWh_h, input_part(da_h_all)]),
        b_z=da_z_all.sum(axis=(0, 1)),
        b_r=da_r_all.sum(axis=(0, 1)),
        b_h=da_h_all.sum(axis=(0, 1)),
    )
    dx = da_z_all @ p.W_z[:, h:] + da_r_all @ p.W_r[:, h:] + da_h_all @ p.W_h[:, h:]
    return dx, grads


############################### 1D convolution ###############################

def _same_padding(m: int) -> Tuple[int, int]:
    left = (m - 1) // 2
    return left, m - 1 - left


def conv1d_forward(x: np.ndarray, p: Conv1dParams, activation: str = "linear") -> Tuple[np.ndarray, dict]:
    """
    Same-length correlation along time: out[t] = f(sum_j w_j x[t + j - left] + b).

    Args:
        x: (B, T, in_channels)
        p: Kernels (out, in, m) and biases
        activation: 'linear' or 'relu'

    Returns:
        ((B, T, out_channels), cache)
    """
    m = p.kernels.shape[2]
    left, right = _same_padding(m)
    padded = np.pad(x, ((0, 0), (left, right), (0, 0)))
    windows = sliding_window_view(padded, m, axis=1)
    out = np.einsum("btcm,ocm->bto", windows, p.kernels) + p.biases
    positive = None
    if activation == "relu":
        out, positive = relu_forward(out)
    return out, {"windows": windows, "T": x.shape[1], "positive": positive}


def conv1d_backward(d_out: np.ndarray, cache: dict, p: Conv1dParams) -> Tuple[np.ndarray, Conv1dParams]:
    if cache["positive"] is not None:
        d_out = relu_backward(d_out, cache["positive"])
    windows, T = cache["windows"], cache["T"]
    m = p.kernels.shape[2]
    left, _ = _same_padding(m)

    d_kernels = np.einsum("bto,btcm->ocm", d_out, windows)
    d_biases = d_out.sum(axis=(0, 1))
    d_padded = np.zeros((d_out.shape[0], T + m - 1, p.kernels.shape[1]))
    for j in range(m):
        d_padded[:, j:j + T] += d_out @ p.kernels[:, :, j]
    dx = d_padded[:, left:left + T]
    return dx, Conv1dParams(kernels=d_kernels, biases=d_biases)


############################### Dense, dropout, loss ###############################

def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray,
                  activation: str = "linear") -> Tuple[np.ndarray, dict]:
    """Affine map on the last axis with an optional ReLU."""
    y = x @ weights.T + bias
    positive = None
    if activation == "relu":
        y, positive = relu_forward(y)
    return y, {"x": x, "positive": positive}


def dense_backward(dy: np.ndarray, cache: dict, p: DenseParams) -> Tuple[np.ndarray, DenseParams]:
    if cache["positive"] is not None:
        dy = relu_backward(dy, cache["positive"])
    x = cache["x"]
    d_weights = dy.reshape(-1, dy.shape[-1]).T @ x.reshape(-1, x.shape[-1])
    d_bias = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    return dy @ p.weights, DenseParams(weights=d_weights, bias=d_bias)


def dropout_forward(x: np.ndarray, rate: float, training: bool,
                    seed: SeedLike = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Inverted dropout; returns (y, mask) with mask None when inactive."""
    if not training or rate == 0:
        return x, None
    rng = np.random.default_rng(seed)
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dy: np.ndarray, mask: Optional[np.ndarray]) -> np.ndarray:
    return dy if mask is None else dy * mask


def mse_loss(pred: np.ndarray, true: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared error and its gradient with respect to ``pred``."""
    pred = np.asarray(pred, dtype=float)
    true = np.asarray(true, dtype=float)
    if pred.size == 0 or true.size == 0:
        raise InvalidLengthError("mse_loss needs non-empty sequences")
    if pred.shape != true.shape:
        raise InvalidLengthError(f"Prediction shape {pred.shape} differs from target shape {true.shape}")
    diff = pred - true
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size
