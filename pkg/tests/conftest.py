import os

import hypothesis
import numpy as np
import pytest

from app.config.settings import settings
from app.models.schemas import ExperimentConfig, NetworkConfig, ScenarioConfig
from app.src.simulation.dataset import build_dataset
from app.src.structure.matrices import ShearBuildingSpec, build_shear_matrices

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=1000, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def reference_spec() -> ShearBuildingSpec:
    building = settings.REFERENCE_BUILDING
    return ShearBuildingSpec.from_arrays(building["masses"], building["stiffnesses"], building["dampings"])


@pytest.fixture
def reference_mats(reference_spec):
    return build_shear_matrices(reference_spec)


@pytest.fixture
def tiny_experiment() -> ExperimentConfig:
    """Shaker experiment small enough for end-to-end tests (seconds, not minutes)."""
    experiment = settings.experiment("desk", "shaker", seed=7)
    scenario = ScenarioConfig(
        kind="shaker",
        duration=2.0,
        dt=0.02,
        count=3,
        split=(1, 1, 1),
        nsr=0.05,
        measured_dofs=[3, 5, 6],
        harmonic={"amplitude": (50.0, 100.0), "omega": (4.0, 8.0), "decay": (0.01, 0.05), "onset": (0.0, 0.2)},
    )
    networks = {
        kind: NetworkConfig(cell=kind, units=3, dense_units=4, kernel_size=3, max_epochs=2, patience=2,
                            learning_rate=1e-3)
        for kind in ("lstm", "gru", "conv")
    }
    return experiment.model_copy(update={"scenario": scenario, "networks": networks, "name": "tiny"})


@pytest.fixture
def tiny_dataset(tiny_experiment):
    return build_dataset(tiny_experiment.scenario, tiny_experiment.building, tiny_experiment.seed)
