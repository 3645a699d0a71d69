"""
Sequence-learning engine: LSTM, GRU and 1D-convolution stacks with
backpropagation through time, Adam and early-stopped training.
"""

from .layers import (
    LSTMParams, GRUParams, Conv1dParams, DenseParams,
    lstm_cell_forward, gru_cell_forward, conv1d_forward, dense_forward, dropout_forward, mse_loss,
)
from .network import Normalizer, init_params, network_forward, network_backward, predict_load
from .optimizer import AdamState, adam_step
from .training import TrainReport, TrainedModel, train
from .checkpoint import save_model, load_model

__all__ = [
    'LSTMParams',
    'GRUParams',
    'Conv1dParams',
    'DenseParams',
    'lstm_cell_forward',
    'gru_cell_forward',
    'conv1d_forward',
    'dense_forward',
    'dropout_forward',
    'mse_loss',
    'Normalizer',
    'init_params',
    'network_forward',
    'network_backward',
    'predict_load',
    'AdamState',
    'adam_step',
    'TrainReport',
    'TrainedModel',
    'train',
    'save_model',
    'load_model',
]
