import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

from pydantic import ValidationError

from app.models.schemas import (
    BuildingConfig, DatasetManifest, DatasetSplit, ExperimentConfig, SequenceEntry
)
from app.src.data_processing.data_loaders import read_sequence, sequence_frame, write_frame
from app.src.simulation.dataset import Dataset, SequenceRecord, build_dataset
from app.src.simulation.loads import LoadSignal
from app.src.simulation.measurement import MeasurementSet, make_pseudo_measurements
from app.src.structure.matrices import ShearBuildingSpec
from app.utils.exceptions import ConfigurationError, InvalidScenarioError, LoadIdError, MissingArtifactError

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class DatasetService:
    """Service for generating, saving and loading sequence datasets"""

    def generate(self, experiment: ExperimentConfig, out_dir: Union[str, Path],
                 nsr: Optional[float] = None) -> Tuple[Dataset, Path]:
        """
        Generate the experiment's dataset and write it to ``out_dir``

        Args:
            experiment: Validated experiment configuration
            out_dir: Dataset directory (one CSV per sequence plus manifest.json)
            nsr: Optional noise level override

        Returns:
            (Dataset, manifest path)
        """
        try:
            dataset = build_dataset(experiment.scenario, experiment.building, experiment.seed, nsr=nsr)
        except LoadIdError as e:
            logger.error(f"Dataset generation failed: {e}")
            raise
        manifest_path = self.save(dataset, out_dir, experiment.building)
        return dataset, manifest_path

    def save(self, dataset: Dataset, out_dir: Union[str, Path], building: Optional[BuildingConfig] = None) -> Path:
        """Write one CSV per sequence and the manifest; returns the manifest path"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        n = dataset.spec.n_stories

        entries = []
        for record in dataset.sequences:
            file_name = f"{record.sequence_id}.csv"
            frame = sequence_frame(
                record.load.time_grid, record.measurements.noisy_accel, record.load.forces, dataset.measured_dofs
            )
            write_frame(frame, out_dir / file_name)
            entries.append(SequenceEntry(
                sequence_id=record.sequence_id,
                file=file_name,
                descriptor=record.load.descriptor,
                noise_seed=record.noise_seed,
            ))

        if building is None:
            building = BuildingConfig(
                n_stories=n,
                masses=list(dataset.spec.masses),
                stiffnesses=list(dataset.spec.stiffnesses),
                dampings=list(dataset.spec.dampings),
                input_dofs=[d + 1 for d in dataset.target_dofs],
            )

        manifest = DatasetManifest(
            scenario=dataset.scenario,
            dt=dataset.dt,
            nsr=dataset.nsr,
            n_stories=n,
            measured_dofs=[d + 1 for d in dataset.measured_dofs],
            target_dofs=[d + 1 for d in dataset.target_dofs],
            detrend_cutoff_hz=dataset.detrend_cutoff_hz,
            seed=dataset.seed,
            building=building,
            split=DatasetSplit(**dataset.split),
            sequences=entries,
        )
        manifest_path = out_dir / MANIFEST_NAME
        manifest_path.write_text(manifest.model_dump_json(indent=2) + "\n")
        logger.info(f"Wrote {len(entries)} sequences and manifest to {out_dir}")
        return manifest_path

    def read_manifest(self, data_dir: Union[str, Path]) -> DatasetManifest:
        manifest_path = Path(data_dir) / MANIFEST_NAME
        if not manifest_path.is_file():
            raise MissingArtifactError(f"Dataset manifest not found: {manifest_path}")
        try:
            return DatasetManifest.model_validate_json(manifest_path.read_text())
        except (ValidationError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Invalid dataset manifest {manifest_path}: {e}") from e

    def load(self, data_dir: Union[str, Path], building: Optional[BuildingConfig] = None) -> Dataset:
        """
        Load a dataset directory written by save, or an external one of the same shape

        Args:
            data_dir: Directory holding manifest.json and the sequence CSVs
            building: Building to use when the manifest carries none

        Returns:
            Dataset with pseudo-measurements rebuilt from the stored accelerations
        """
        data_dir = Path(data_dir)
        manifest = self.read_manifest(data_dir)
        building = manifest.building or building
        if building is None:
            raise ConfigurationError(f"Dataset {data_dir} has no building description")
        if building.n_stories != manifest.n_stories:
            raise ConfigurationError(f"Building has {building.n_stories} stories, dataset {manifest.n_stories}")

        measured = [d - 1 for d in manifest.measured_dofs]
        sequences = []
        for entry in manifest.sequences:
            t, accel, forces = read_sequence(data_dir / entry.file, measured, manifest.n_stories)
            pseudo_disp, pseudo_vel = make_pseudo_measurements(accel, manifest.dt, manifest.detrend_cutoff_hz)
            measurements = MeasurementSet(
                measured_dofs=measured,
                noisy_accel=accel,
                nsr=manifest.nsr,
                pseudo_disp=pseudo_disp,
                pseudo_vel=pseudo_vel,
                dt=manifest.dt,
                seed=entry.noise_seed,
            )
            load = LoadSignal(time_grid=t, forces=forces, dt=manifest.dt, descriptor=entry.descriptor)
            sequences.append(SequenceRecord(
                sequence_id=entry.sequence_id, measurements=measurements, load=load, noise_seed=entry.noise_seed
            ))

        split = manifest.split.model_dump()
        all_indices = sorted(i for indices in split.values() for i in indices)
        if all_indices != list(range(len(sequences))):
            raise InvalidScenarioError(f"Split of {data_dir} is not a partition of its {len(sequences)} sequences")

        logger.info(f"Loaded {len(sequences)} sequences from {data_dir}")
        return Dataset(
            sequences=sequences,
            split=split,
            measured_dofs=measured,
            target_dofs=[d - 1 for d in manifest.target_dofs],
            dt=manifest.dt,
            nsr=manifest.nsr,
            scenario=manifest.scenario,
            seed=manifest.seed,
            spec=ShearBuildingSpec.from_arrays(building.masses, building.stiffnesses, building.dampings),
            detrend_cutoff_hz=manifest.detrend_cutoff_hz,
        )


# Global dataset service instance
dataset_service = DatasetService()
