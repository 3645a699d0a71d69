import json
import logging
from pathlib import Path
from typing import Dict, Any, Optional, Union

from pydantic import ValidationError

from app.config.config import config
from app.models.schemas import (
    BuildingConfig, ScenarioConfig, FilterConfig, NetworkConfig, HarmonicRanges,
    ExperimentConfig, EvaluationConfig
)
from app.utils.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class Settings:
    """Workbench settings and experiment presets"""

    # Application metadata
    APP_NAME = "loadid"
    APP_DESCRIPTION = "Dynamic load identification workbench: residual Kalman filter versus LSTM/GRU/1D-CNN learners"
    APP_VERSION = "1.0.0"

    DEFAULT_SEED = 2024

    # Reference 6-story shear building
    REFERENCE_BUILDING = {
        "n_stories": 6,
        "masses": [100.0] * 6,
        "stiffnesses": [900.0, 900.0, 1100.0, 1100.0, 1300.0, 1300.0],
        "dampings": [25.0, 25.0, 50.0, 50.0, 75.0, 75.0],
    }

    # Loaded story per scenario (1-based); base excitation loads every story
    SCENARIO_INPUT_DOFS = {
        "shaker": [6],
        "base": [6],
        "impact": [1],
    }

    # Measured stories per scenario (1-based)
    SCENARIO_MEASURED_DOFS = {
        "shaker": [3, 5, 6],
        "base": [1, 3, 6],
        "impact": [1, 2, 3, 4, 5, 6],
    }

    # Reference filter configuration
    REFERENCE_FILTER = {
        "q_scale": 1.0,
        "r_scale": 1e-10,
        "lambda2": 5e-2,
        "mu": 5e-3,
        "detrend_cutoff_hz": 0.05,
    }

    NOISE_LEVELS = [0.05, 0.10, 0.15, 0.20]

    # Presets: record length, sampling and training budget
    PRESETS: Dict[str, Dict[str, Any]] = {
        "paper": {
            "duration": 200.0,
            "dt": 0.01,
            "max_epochs": 10000,
            "patience": 200,
            "impact_duration": 20.0,
        },
        "desk": {
            "duration": 20.0,
            "dt": 0.02,
            "max_epochs": 500,
            "patience": 50,
            "impact_duration": 10.0,
        },
    }
    PRESETS["full"] = PRESETS["paper"]

    def building(self, scenario: str = "shaker") -> BuildingConfig:
        """Reference building with the scenario's loaded stories"""
        return BuildingConfig(**self.REFERENCE_BUILDING, input_dofs=self.SCENARIO_INPUT_DOFS[scenario])

    def experiment(self, preset: str = "desk", scenario: str = "shaker", seed: Optional[int] = None) -> ExperimentConfig:
        """
        Build a complete experiment configuration from a preset

        Args:
            preset: 'desk' (minutes) or 'paper' (reference scale, hours of training;
                'full' is an alias)
            scenario: 'shaker', 'base' or 'impact'
            seed: Master seed (defaults to DEFAULT_SEED)

        Returns:
            ExperimentConfig ready for validation and use
        """
        if preset not in self.PRESETS:
            raise ConfigurationError(f"Unknown preset {preset!r}; choose one of {sorted(self.PRESETS)}")
        if scenario not in self.SCENARIO_INPUT_DOFS:
            raise ConfigurationError(f"Unknown scenario {scenario!r}; choose one of {sorted(self.SCENARIO_INPUT_DOFS)}")
        values = self.PRESETS[preset]
        duration = values["impact_duration"] if scenario == "impact" else values["duration"]

        scenario_config = ScenarioConfig(
            kind=scenario,
            duration=duration,
            dt=values["dt"],
            measured_dofs=self.SCENARIO_MEASURED_DOFS[scenario],
            # onsets stay within the first fifth of the record
            harmonic=HarmonicRanges(onset=(0.0, 0.2 * duration)),
        )

        networks = {
            kind: NetworkConfig(cell=kind, max_epochs=values["max_epochs"], patience=values["patience"])
            for kind in ("lstm", "gru", "conv")
        }

        return ExperimentConfig(
            name=f"{scenario}-{preset}",
            seed=self.DEFAULT_SEED if seed is None else seed,
            output_dir=f"{config.get_runtime_config()['output_dir']}/{scenario}-{preset}",
            building=self.building(scenario),
            scenario=scenario_config,
            networks=networks,
            filter=FilterConfig(**self.REFERENCE_FILTER),
            evaluation=EvaluationConfig(),
            noise_levels=list(self.NOISE_LEVELS),
        )

    def load_experiment(self, path: Optional[Union[str, Path]] = None, preset: str = "desk",
                        scenario: str = "shaker", seed: Optional[int] = None,
                        output_dir: Optional[str] = None) -> ExperimentConfig:
        """
        Resolve the experiment for a command: a JSON file when given, else a preset

        Args:
            path: Optional experiment JSON document
            preset: Preset used when no file is given
            scenario: Scenario used when no file is given
            seed: Master seed override
            output_dir: Output directory override

        Returns:
            Validated ExperimentConfig

        Raises:
            ConfigurationError: Missing, unparsable or invalid document
        """
        if path is None:
            experiment = self.experiment(preset, scenario, seed)
        else:
            path = Path(path)
            if not path.is_file():
                raise ConfigurationError(f"Experiment file not found: {path}")
            try:
                experiment = ExperimentConfig.model_validate_json(path.read_text())
            except (ValidationError, json.JSONDecodeError) as e:
                raise ConfigurationError(f"Invalid experiment file {path}: {e}") from e
            logger.info(f"Loaded experiment {experiment.name!r} from {path}")
            if seed is not None:
                experiment = experiment.model_copy(update={"seed": seed})

        if output_dir is not None:
            experiment = experiment.model_copy(update={"output_dir": output_dir})
        return experiment


# Global settings instance
settings = Settings()
