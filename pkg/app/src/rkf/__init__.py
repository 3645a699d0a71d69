"""
Residual Kalman filter package.
"""

from .kalman import predict, gain, update_state
from .parameters import sensitivity, update_parameters
from .filter import (
    FilterState,
    FilterModel,
    EstimateTrace,
    build_filter_model,
    estimate_input,
    estimated_accelerations,
    initial_state,
    initial_theta,
    rkf_step,
    run_rkf,
)

__all__ = [
    'predict',
    'gain',
    'update_state',
    'sensitivity',
    'update_parameters',
    'FilterState',
    'FilterModel',
    'EstimateTrace',
    'build_filter_model',
    'estimate_input',
    'estimated_accelerations',
    'initial_state',
    'initial_theta',
    'rkf_step',
    'run_rkf',
]
