import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from app.models.schemas import ExperimentConfig, NetworkConfig
from app.src.data_processing.data_loaders import loss_curve_frame, prediction_frame, write_frame
from app.src.nets.checkpoint import save_model
from app.src.nets.training import TrainedModel, TrainReport, train
from app.src.simulation.dataset import Dataset
from app.utils.exceptions import ConfigurationError, LoadIdError
from app.utils.workers import map_ordered

logger = logging.getLogger(__name__)


class TrainingService:
    """Service for training the sequence networks and writing their artifacts"""

    def network_config(self, experiment: ExperimentConfig, cell: str) -> NetworkConfig:
        if cell not in experiment.networks:
            raise ConfigurationError(f"No network configuration for cell {cell!r}; have {sorted(experiment.networks)}")
        return experiment.networks[cell]

    def train(self, experiment: ExperimentConfig, dataset: Dataset, cell: str,
              out_dir: Union[str, Path]) -> Tuple[TrainedModel, TrainReport]:
        """
        Train one network, then write its checkpoint, loss curve and test predictions

        Args:
            experiment: Experiment configuration
            dataset: Dataset with train/val/test split
            cell: 'lstm', 'gru' or 'conv'
            out_dir: Run directory (models/ and predictions/<cell>/ are created inside)

        Returns:
            (TrainedModel, TrainReport)
        """
        out_dir = Path(out_dir)
        config = self.network_config(experiment, cell)
        seed = config.seed if config.seed is not None else experiment.seed
        logger.info(f"Training {cell} network (dropout {config.dropout}, seed {seed})")

        try:
            model, report = train(config, dataset, seed=seed)
        except LoadIdError as e:
            logger.error(f"Training of {cell} failed: {e}")
            raise

        save_model(out_dir / "models" / f"{cell}.ckpt", model)
        write_frame(loss_curve_frame(report), out_dir / "models" / f"{cell}_loss.csv")
        self.predict(model, dataset, out_dir / "predictions" / cell)
        return model, report

    def predict(self, model: TrainedModel, dataset: Dataset, pred_dir: Union[str, Path],
                split: str = "test") -> List[Path]:
        """Write one prediction CSV per sequence of ``split``"""
        pred_dir = Path(pred_dir)
        paths = []
        for record in dataset.subset(split):
            pred = model.predict(record.measurements.noisy_accel)
            paths.append(write_frame(
                prediction_frame(record.load.time_grid, pred, dataset.target_dofs),
                pred_dir / f"{record.sequence_id}.csv",
            ))
        logger.info(f"Wrote {len(paths)} {model.config.cell} predictions to {pred_dir}")
        return paths

    def train_all(self, experiment: ExperimentConfig, dataset: Dataset, out_dir: Union[str, Path],
                  cells: Optional[Sequence[str]] = None) -> Dict[str, TrainReport]:
        """Train several networks, concurrently when the worker pool allows"""
        cells = list(cells or experiment.networks)
        results = map_ordered(lambda cell: self.train(experiment, dataset, cell, out_dir)[1], cells)
        return dict(zip(cells, results))


# Global training service instance
training_service = TrainingService()
