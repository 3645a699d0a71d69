from .metrics import ErrorCurve, RunResult, accumulated_error, rms_nsr, mean_squared_error, summarize

__all__ = ['ErrorCurve', 'RunResult', 'accumulated_error', 'rms_nsr', 'mean_squared_error', 'summarize']
