"""
Data processing package: CSV persistence of sequences, filter traces,
network predictions, loss curves and error curves.
"""

from .data_loaders import (
    FLOAT_FORMAT,
    write_frame,
    read_frame,
    file_sha256,
    sequence_frame,
    read_sequence,
    trace_frame,
    loss_curve_frame,
    prediction_frame,
    read_prediction,
    error_curve_frame,
)

__all__ = [
    'FLOAT_FORMAT',
    'write_frame',
    'read_frame',
    'file_sha256',
    'sequence_frame',
    'read_sequence',
    'trace_frame',
    'loss_curve_frame',
    'prediction_frame',
    'read_prediction',
    'error_curve_frame',
]
