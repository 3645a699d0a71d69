"""
Exception hierarchy for the load identification workbench.

Every error carries a human readable ``detail`` and the process ``exit_code``
the command line surface should return for it (2 = bad input or missing
artifact, 3 = numerical failure).
"""

from typing import Optional


class LoadIdError(Exception):
    """Base class for all workbench errors."""

    exit_code: int = 2

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return self.detail


############################### Input / configuration errors ###############################

class ConfigurationError(LoadIdError):
    """Invalid or unreadable experiment configuration."""


class InvalidSpecError(LoadIdError):
    """Non-positive or length-mismatched building specification."""


class InvalidStepError(LoadIdError):
    """Non-positive time step."""


class InvalidParameterError(LoadIdError):
    """Parameter vector of the wrong length or with non-positive entries."""


class SingularMassError(LoadIdError):
    """Mass matrix cannot be inverted."""


class InvalidDofError(LoadIdError):
    """Degree-of-freedom index outside the structure."""


class InvalidBandError(LoadIdError):
    """Band-pass corner frequencies outside (0, Nyquist) or misordered."""


class TruncationError(LoadIdError):
    """Pulse would extend past the end of the record."""


class InvalidScenarioError(LoadIdError):
    """Inconsistent scenario ranges or split counts."""


class DegenerateChannelError(LoadIdError):
    """Channel with zero RMS where a ratio against it is required."""


class DegenerateTruthError(LoadIdError):
    """Reference load that is identically zero."""


class InvalidLengthError(LoadIdError):
    """Empty or length-mismatched sequences."""


class ShapeError(LoadIdError):
    """Array shape does not match what a layer or model expects."""


class MissingArtifactError(LoadIdError):
    """Expected dataset, model or prediction file is not present."""


############################### Numerical failures ###############################

class NumericalError(LoadIdError):
    """Base class for numerical breakdowns."""

    exit_code = 3


class IllConditionedInnovationError(NumericalError):
    """Pre-fit residual covariance is singular."""

    def __init__(self, detail: str, condition: float = float("inf")):
        super().__init__(detail)
        self.condition = condition


class RegularizationRequiredError(NumericalError):
    """Gauss-Newton normal matrix is singular and no regularization was given."""


class SensitivityFailureError(NumericalError):
    """Finite-difference perturbation produced a non-finite response."""


class DivergenceError(NumericalError):
    """Non-finite state during integration or filtering."""

    def __init__(self, detail: str, step: Optional[int] = None, sequence_id: Optional[str] = None):
        super().__init__(detail)
        self.step = step
        self.sequence_id = sequence_id

    def __str__(self) -> str:
        parts = [self.detail]
        if self.step is not None:
            parts.append(f"step={self.step}")
        if self.sequence_id is not None:
            parts.append(f"sequence={self.sequence_id}")
        return " ".join(parts)


class TrainingDivergenceError(NumericalError):
    """Non-finite loss during network training."""

    def __init__(self, detail: str, epoch: Optional[int] = None):
        super().__init__(detail)
        self.epoch = epoch


class ToleranceExceededError(NumericalError):
    """An evaluated error exceeds its configured bound."""
