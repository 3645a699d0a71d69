"""
Structural model package: shear-chain matrices, state-space assembly and
discretization, parameter vector mapping.
"""

from .matrices import (
    ShearBuildingSpec,
    SystemMatrices,
    build_shear_matrices,
    matrices_from_theta,
    spec_with_theta,
    theta_of,
)
from .state_space import (
    StateSpace,
    DiscreteStateSpace,
    assemble_state_space,
    discretize,
)

__all__ = [
    'ShearBuildingSpec',
    'SystemMatrices',
    'build_shear_matrices',
    'matrices_from_theta',
    'spec_with_theta',
    'theta_of',
    'StateSpace',
    'DiscreteStateSpace',
    'assemble_state_space',
    'discretize',
]
