"""
Simulation package: load generators, RK4 response, measurement noise,
pseudo-measurements and dataset assembly.
"""

from .loads import LoadSignal, gen_decaying_harmonic, gen_base_excitation, gen_impulse, make_time_grid
from .integrator import ResponseRecord, integrate_rk4
from .measurement import MeasurementSet, add_noise, make_pseudo_measurements, measure
from .dataset import Dataset, SequenceRecord, build_dataset, building_spec

__all__ = [
    'LoadSignal',
    'gen_decaying_harmonic',
    'gen_base_excitation',
    'gen_impulse',
    'make_time_grid',
    'ResponseRecord',
    'integrate_rk4',
    'MeasurementSet',
    'add_noise',
    'make_pseudo_measurements',
    'measure',
    'Dataset',
    'SequenceRecord',
    'build_dataset',
    'building_spec',
]
