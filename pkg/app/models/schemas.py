from typing import Optional, List, Dict, Literal, Tuple
from pydantic import BaseModel, Field, field_validator, model_validator

from app.utils.validators import (
    validate_positive, validate_positive_array, validate_story_numbers,
    validate_range, validate_rate, validate_split, validate_non_negative, validate_length,
    validate_split_indices
)

SCHEMA_VERSION = 1

ScenarioKind = Literal["shaker", "base", "impact"]
CellKind = Literal["lstm", "gru", "conv"]


############################### Building Schemas ##################################

class BuildingConfig(BaseModel):
    """Shear building description as written in configuration files (stories are 1-based)."""
    n_stories: int = Field(default=6, ge=1, description="Number of stories / DOFs")
    masses: List[float] = Field(default=[100.0] * 6, description="Story masses [kg]")
    stiffnesses: List[float] = Field(default=[900.0, 900.0, 1100.0, 1100.0, 1300.0, 1300.0], description="Inter-story stiffness [N/m]")
    dampings: List[float] = Field(default=[25.0, 25.0, 50.0, 50.0, 75.0, 75.0], description="Inter-story damping [N s/m]")
    input_dofs: List[int] = Field(default=[6], description="Loaded stories (1-based)")

    @model_validator(mode="after")
    def check_consistency(self) -> "BuildingConfig":
        for name in ("masses", "stiffnesses", "dampings"):
            values = getattr(self, name)
            if not validate_length(values, self.n_stories):
                raise ValueError(f"{name} has {len(values)} entries, expected n_stories={self.n_stories}")
            if not validate_positive_array(values):
                raise ValueError(f"{name} must be strictly positive")
        if not validate_story_numbers(self.input_dofs, self.n_stories):
            raise ValueError(f"input_dofs {self.input_dofs} must be distinct stories in 1..{self.n_stories}")
        return self

    @property
    def input_indices(self) -> List[int]:
        return [s - 1 for s in self.input_dofs]


############################### Scenario Schemas ##################################

class HarmonicRanges(BaseModel):
    """Ranges for the decaying harmonic shaker load."""
    amplitude: Tuple[float, float] = (50.0, 200.0)
    omega: Tuple[float, float] = (2.0, 12.0)
    decay: Tuple[float, float] = (0.01, 0.05)
    onset: Tuple[float, float] = (0.0, 40.0)

    @model_validator(mode="after")
    def check_ranges(self) -> "HarmonicRanges":
        for name in ("amplitude", "omega", "decay", "onset"):
            if not validate_range(getattr(self, name)):
                raise ValueError(f"{name} must be an ordered (low, high) pair")
        if self.decay[0] < 0 or self.onset[0] < 0:
            raise ValueError("decay and onset must be non-negative")
        return self


class BaseExcitationRanges(BaseModel):
    """Ranges for the synthetic ground motion (envelope given as fractions of the record)."""
    intensity: Tuple[float, float] = (0.5, 2.0)
    corner_freqs: Tuple[float, float] = (0.1, 5.0)
    rise_fraction: float = Field(default=0.1, gt=0, lt=1)
    plateau_fraction: float = Field(default=0.4, ge=0, lt=1)
    fall_fraction: float = Field(default=0.3, gt=0, lt=1)

    @model_validator(mode="after")
    def check_ranges(self) -> "BaseExcitationRanges":
        if not validate_range(self.intensity) or self.intensity[0] < 0:
            raise ValueError("intensity must be a non-negative ordered pair")
        if not (0 < self.corner_freqs[0] < self.corner_freqs[1]):
            raise ValueError("corner_freqs must satisfy 0 < f_lo < f_hi")
        return self


class ImpactRanges(BaseModel):
    """Ranges for the half-sine hammer analog (impact time as a fraction of the record)."""
    peak: Tuple[float, float] = (50.0, 200.0)
    width: Tuple[float, float] = (0.05, 0.2)
    impact_fraction: Tuple[float, float] = (0.1, 0.6)

    @model_validator(mode="after")
    def check_ranges(self) -> "ImpactRanges":
        for name in ("peak", "width", "impact_fraction"):
            if not validate_range(getattr(self, name)):
                raise ValueError(f"{name} must be an ordered (low, high) pair")
        if self.width[0] <= 0 or not (0 <= self.impact_fraction[0] and self.impact_fraction[1] < 1):
            raise ValueError("width must be positive and impact_fraction within [0, 1)")
        return self


class ScenarioConfig(BaseModel):
    """Dataset generation settings (stories are 1-based)."""
    kind: ScenarioKind = "shaker"
    duration: float = Field(default=200.0, gt=0, description="Record length [s]")
    dt: float = Field(default=0.01, gt=0, description="Sampling interval [s]")
    count: int = Field(default=21, ge=1)
    split: Tuple[int, int, int] = (11, 4, 6)
    nsr: float = Field(default=0.05, ge=0, description="RMS noise-to-signal ratio")
    measured_dofs: List[int] = Field(default=[3, 5, 6], description="Measured stories (1-based)")
    detrend_cutoff_hz: Optional[float] = Field(default=None, description="Optional drift suppression of pseudo-measurements")
    harmonic: HarmonicRanges = Field(default_factory=HarmonicRanges)
    base: BaseExcitationRanges = Field(default_factory=BaseExcitationRanges)
    impact: ImpactRanges = Field(default_factory=ImpactRanges)

    @model_validator(mode="after")
    def check_scenario(self) -> "ScenarioConfig":
        if not validate_split(self.split, self.count):
            raise ValueError(f"split {self.split} must sum to count={self.count}")
        if self.dt >= self.duration:
            raise ValueError("dt must be smaller than duration")
        if self.detrend_cutoff_hz is not None and not validate_positive(self.detrend_cutoff_hz):
            raise ValueError("detrend_cutoff_hz must be positive when given")
        if self.kind == "base" and self.base.corner_freqs[1] >= 0.5 / self.dt:
            raise ValueError("base corner frequencies must lie below the Nyquist frequency")
        if self.kind == "impact" and self.impact.width[0] < 2 * self.dt:
            raise ValueError("impact width must be at least two samples")
        return self

    @property
    def measured_indices(self) -> List[int]:
        return [s - 1 for s in self.measured_dofs]

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.dt))


############################### Filter Schemas ##################################

class FilterConfig(BaseModel):
    """Residual Kalman filter settings."""
    q_scale: float = Field(default=1.0, gt=0, description="Process noise diagonal Q_d")
    r_scale: float = Field(default=1e-10, gt=0, description="Observation noise diagonal R_d of measured channels")
    filled_r_scale: float = Field(default=1e6, gt=0, description="Observation noise of pseudo-measurements integrated from estimated accelerations")
    lambda2: float = Field(default=5e-2, ge=0, description="Gauss-Newton regularization")
    mu: float = Field(default=5e-3, ge=0, description="Residual step-control scale")
    theta0: Optional[List[float]] = Field(default=None, description="Initial [k_1..k_n, c_1..c_n]; derived from the building when omitted")
    stiffness_offset: float = Field(default=0.3, gt=-1, description="Relative offset of the derived initial stiffness guess")
    damping_offset: float = Field(default=0.3, gt=-1, description="Relative offset of the derived initial damping guess")
    z0: Optional[List[float]] = None
    p0_scale: float = Field(default=1.0, gt=0)
    fd_step: float = Field(default=1e-6, gt=0, le=1e-2)
    known_inputs: Optional[List[bool]] = Field(default=None, description="Per-DOF mask of known inputs; derived from the scenario when omitted")
    estimate_parameters: bool = True
    theta_floor: float = Field(default=1e-6, gt=0, description="Positive floor relative to the initial magnitude")
    detrend_cutoff_hz: Optional[float] = Field(default=0.05, gt=0, description="Leak cutoff of the online pseudo-measurement integrators; None integrates plainly")

    @field_validator("theta0")
    @classmethod
    def check_theta0(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and not validate_positive_array(value):
            raise ValueError("theta0 entries must be strictly positive")
        return value


############################### Network Schemas ##################################

class NetworkConfig(BaseModel):
    """Sequence network settings; defaults reproduce the reference stack."""
    cell: CellKind = "lstm"
    units: int = Field(default=30, ge=1)
    layer_pairs: int = Field(default=2, ge=1, le=2)
    dropout: float = Field(default=0.3, description="Dropout rate (forced to 0 for conv)")
    dense_units: int = Field(default=100, ge=1)
    kernel_size: int = Field(default=9, ge=1)
    learning_rate: float = Field(default=1e-4, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    batch_size: int = Field(default=2, ge=1)
    max_epochs: int = Field(default=10000, ge=0)
    patience: int = Field(default=200, ge=1)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def check_network(self) -> "NetworkConfig":
        if not validate_rate(self.dropout):
            raise ValueError("dropout must lie in [0, 1)")
        if self.cell == "conv":
            self.dropout = 0.0
        return self


############################### Evaluation Schemas ##################################

class EvaluationConfig(BaseModel):
    eps_rel: float = Field(default=1e-3, gt=0, description="Relative threshold for skipping near-zero truth samples")
    noiseless_bound: Optional[float] = Field(default=None, description="Upper bound on final E asserted by evaluate")


############################### Experiment Schemas ##################################

def _default_networks() -> Dict[str, NetworkConfig]:
    return {kind: NetworkConfig(cell=kind) for kind in ("lstm", "gru", "conv")}


class ExperimentConfig(BaseModel):
    """Complete experiment document."""
    name: str = "shaker"
    seed: int = 2024
    output_dir: str = "runs/shaker"
    building: BuildingConfig = Field(default_factory=BuildingConfig)
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    networks: Dict[str, NetworkConfig] = Field(default_factory=_default_networks)
    filter: FilterConfig = Field(default_factory=FilterConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    noise_levels: List[float] = Field(default=[0.05, 0.10, 0.15, 0.20])

    @model_validator(mode="after")
    def check_experiment(self) -> "ExperimentConfig":
        n = self.building.n_stories
        if not validate_story_numbers(self.scenario.measured_dofs, n):
            raise ValueError(f"measured_dofs {self.scenario.measured_dofs} must be distinct stories in 1..{n}")
        if self.filter.known_inputs is not None and len(self.filter.known_inputs) != n:
            raise ValueError("known_inputs must have one flag per story")
        if self.filter.theta0 is not None and len(self.filter.theta0) != 2 * n:
            raise ValueError("theta0 must have 2 * n_stories entries")
        if self.filter.z0 is not None and len(self.filter.z0) != 2 * n:
            raise ValueError("z0 must have 2 * n_stories entries")
        for key, net in self.networks.items():
            if key != net.cell:
                raise ValueError(f"network entry {key!r} declares cell {net.cell!r}")
        if not all(validate_non_negative(level) for level in self.noise_levels):
            raise ValueError("noise_levels must be non-negative")
        return self


############################### Manifest Schemas ##################################

class LoadDescriptor(BaseModel):
    """How a load signal was generated."""
    kind: Literal["harmonic", "base", "impulse", "external"]
    params: Dict[str, float] = Field(default_factory=dict)
    seed: Optional[int] = None


class SequenceEntry(BaseModel):
    sequence_id: str
    file: str
    descriptor: LoadDescriptor
    noise_seed: Optional[int] = None


class DatasetSplit(BaseModel):
    train: List[int] = Field(default_factory=list)
    val: List[int] = Field(default_factory=list)
    test: List[int] = Field(default_factory=list)


class DatasetManifest(BaseModel):
    """Sidecar describing a directory of sequence CSVs (stories 1-based, split by position)."""
    version: int = SCHEMA_VERSION
    scenario: str
    dt: float
    nsr: float
    n_stories: int
    measured_dofs: List[int]
    target_dofs: List[int]
    detrend_cutoff_hz: Optional[float] = None
    seed: Optional[int] = None
    building: Optional[BuildingConfig] = None
    split: DatasetSplit
    sequences: List[SequenceEntry]

    @model_validator(mode="after")
    def check_split(self) -> "DatasetManifest":
        if not validate_split_indices(self.split.train, self.split.val, self.split.test, len(self.sequences)):
            raise ValueError("split must partition the sequence positions")
        return self


class FileEntry(BaseModel):
    path: str
    sha256: str


class RunManifest(BaseModel):
    """Record of a comparison run."""
    version: int = SCHEMA_VERSION
    name: str
    created_at: str
    seed: int
    seeds: Dict[str, int] = Field(default_factory=dict)
    versions: Dict[str, str] = Field(default_factory=dict)
    timings: Dict[str, float] = Field(default_factory=dict)
    files: List[FileEntry] = Field(default_factory=list)


############################### Checkpoint Schemas ##################################

class ParameterEntry(BaseModel):
    name: str
    shape: List[int]


class CheckpointHeader(BaseModel):
    """JSON header of a network checkpoint; arrays follow in ``parameters`` order."""
    version: int = SCHEMA_VERSION
    config: NetworkConfig
    n_inputs: int
    n_outputs: int
    normalizer: Dict[str, List[float]]
    seed: int
    parameters: List[ParameterEntry]
