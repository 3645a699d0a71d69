"""
Numerical core of the load identification workbench.

Packages:
- structure: shear-chain matrices and state-space models
- simulation: loads, RK4 response, measurements and datasets
- rkf: residual Kalman filter with online parameter correction
- nets: recurrent and convolutional sequence networks
- evaluation: accumulated error metrics
- data_processing: CSV persistence
"""

__version__ = "1.0.0"
