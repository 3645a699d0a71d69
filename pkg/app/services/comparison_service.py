import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, TypeVar, Union

import numpy as np
import pandas as pd
import pydantic
import scipy

from app.config.settings import settings
from app.models.schemas import ExperimentConfig, FileEntry, RunManifest
from app.services.dataset_service import dataset_service
from app.services.evaluation_service import evaluation_service
from app.services.filter_service import filter_service
from app.services.training_service import training_service
from app.src.data_processing.data_loaders import file_sha256, write_frame
from app.src.simulation.dataset import build_dataset
from app.utils.exceptions import LoadIdError
from app.utils.seeding import derive_seed
from app.utils.timing import Stopwatch, get_utc_timestamp

logger = logging.getLogger(__name__)

RUN_MANIFEST_NAME = "run_manifest.json"

T = TypeVar("T")


class ComparisonService:
    """Service orchestrating generate -> train -> filter -> evaluate into one report directory"""

    def __init__(self):
        self.timings: Dict[str, float] = {}

    def _stage(self, name: str, fn: Callable[[], T]) -> T:
        """Run a stage, timing it and labelling any failure with the stage name"""
        logger.info(f"Stage {name} started")
        try:
            with Stopwatch() as watch:
                result = fn()
        except LoadIdError as e:
            e.detail = f"[{name}] {e.detail}"
            logger.error(f"Stage {name} failed: {e}")
            raise
        self.timings[name] = round(watch.elapsed, 3)
        logger.info(f"Stage {name} finished in {watch.elapsed:.1f}s")
        return result

    def compare(self, experiment: ExperimentConfig, out_dir: Union[str, Path],
                cells: Optional[Sequence[str]] = None, noise_sweep: bool = False) -> RunManifest:
        """
        Run the full comparison and write the run manifest

        Args:
            experiment: Experiment configuration
            out_dir: Report directory
            cells: Network kinds to train (all configured when omitted)
            noise_sweep: Also run the filter at every level of experiment.noise_levels

        Returns:
            RunManifest listing every output file with its checksum
        """
        out_dir = Path(out_dir)
        self.timings = {}
        cells = list(cells or experiment.networks)

        dataset, _ = self._stage("generate", lambda: dataset_service.generate(experiment, out_dir / "dataset"))
        reports = self._stage("train", lambda: training_service.train_all(experiment, dataset, out_dir, cells))
        self._stage("filter", lambda: filter_service.run(experiment, dataset, out_dir))
        self._stage(
            "evaluate",
            lambda: evaluation_service.evaluate(
                experiment, dataset, out_dir / "predictions", out_dir, methods=["rkf"] + cells
            ),
        )
        if noise_sweep:
            self._stage("noise_sweep", lambda: self.noise_sweep(experiment, out_dir / "noise_sweep"))

        for cell, report in reports.items():
            self.timings[f"train_{cell}_wall_s"] = round(report.wall_time, 3)
            self.timings[f"train_{cell}_min_per_1000_epochs"] = round(report.minutes_per_1000_epochs, 3)
            logger.info(
                f"{cell}: {report.stopped_epoch} epochs, {report.minutes_per_1000_epochs:.2f} min per 1000 epochs"
            )

        return self.write_manifest(experiment, out_dir, cells)

    def noise_sweep(self, experiment: ExperimentConfig, sweep_dir: Union[str, Path]) -> pd.DataFrame:
        """
        Filter matched-seed datasets at every noise level

        Loads and noise streams come from the same seeds at every level, so only
        the noise amplitude changes.

        Returns:
            Long table (level, method, sequence, dof, final_E), also written to noise_sweep.csv
        """
        sweep_dir = Path(sweep_dir)
        frames = []
        for level in experiment.noise_levels:
            level_dir = sweep_dir / f"nsr_{level:.2f}"
            dataset = build_dataset(experiment.scenario, experiment.building, experiment.seed, nsr=level)
            filter_service.run(experiment, dataset, level_dir)
            summary = evaluation_service.evaluate(
                experiment, dataset, level_dir / "predictions", level_dir, methods=["rkf"]
            )
            frame = summary.melt(id_vars=["sequence", "dof"], value_vars=["rkf"], var_name="method", value_name="final_E")
            frame.insert(0, "level", level)
            frames.append(frame)
            logger.info(f"Noise level {level:.2f}: mean RKF final E {frame['final_E'].mean():.4g}")

        table = pd.concat(frames, ignore_index=True)[["level", "method", "sequence", "dof", "final_E"]]
        write_frame(table, sweep_dir / "noise_sweep.csv")
        return table

    def write_manifest(self, experiment: ExperimentConfig, out_dir: Path, cells: List[str]) -> RunManifest:
        """Checksum every file in the report directory and write run_manifest.json"""
        files = [
            FileEntry(path=path.relative_to(out_dir).as_posix(), sha256=file_sha256(path))
            for path in sorted(out_dir.rglob("*"))
            if path.is_file() and path.name != RUN_MANIFEST_NAME
        ]
        seeds = {"master": experiment.seed, "split": derive_seed(experiment.seed, "split")}
        seeds.update({f"init_{cell}": derive_seed(experiment.seed, "init", cell) for cell in cells})

        manifest = RunManifest(
            name=experiment.name,
            created_at=get_utc_timestamp(),
            seed=experiment.seed,
            seeds=seeds,
            versions={
                settings.APP_NAME: settings.APP_VERSION,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "pandas": pd.__version__,
                "pydantic": pydantic.VERSION,
            },
            timings=dict(self.timings),
            files=files,
        )
        (out_dir / RUN_MANIFEST_NAME).write_text(manifest.model_dump_json(indent=2) + "\n")
        logger.info(f"Run manifest lists {len(files)} files in {out_dir}")
        return manifest


# Global comparison service instance
comparison_service = ComparisonService()
