import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from app.models.schemas import ExperimentConfig
from app.src.data_processing.data_loaders import error_curve_frame, read_prediction, write_frame
from app.src.evaluation.metrics import RunResult, accumulated_error, mean_squared_error, summarize
from app.src.simulation.dataset import Dataset
from app.utils.exceptions import MissingArtifactError, ToleranceExceededError

logger = logging.getLogger(__name__)

# Column order of the summary table
METHOD_ORDER = ["rkf", "lstm", "gru", "conv"]


class EvaluationService:
    """Service for scoring predicted loads against the true loads"""

    def discover_methods(self, predictions_dir: Union[str, Path]) -> List[str]:
        predictions_dir = Path(predictions_dir)
        if not predictions_dir.is_dir():
            raise MissingArtifactError(f"Predictions directory not found: {predictions_dir}")
        present = sorted(p.name for p in predictions_dir.iterdir() if p.is_dir())
        methods = [m for m in METHOD_ORDER if m in present] + [m for m in present if m not in METHOD_ORDER]
        if not methods:
            raise MissingArtifactError(f"No method subdirectories in {predictions_dir}")
        return methods

    def score(self, experiment: ExperimentConfig, dataset: Dataset, predictions_dir: Union[str, Path],
              methods: Sequence[str], split: str = "test") -> List[RunResult]:
        """Error curves for every (method, sequence, target DOF)"""
        predictions_dir = Path(predictions_dir)
        eps_rel = experiment.evaluation.eps_rel
        results = []
        for method in methods:
            for record in dataset.subset(split):
                path = predictions_dir / method / f"{record.sequence_id}.csv"
                if not path.is_file():
                    raise MissingArtifactError(f"Missing {method} prediction for {record.sequence_id}: {path}")
                pred = read_prediction(path, dataset.target_dofs)
                for column, dof in enumerate(dataset.target_dofs):
                    truth = record.load.forces[:, dof]
                    curve = accumulated_error(pred[:, column], truth, eps_rel, record.load.time_grid)
                    results.append(RunResult(
                        method=method,
                        sequence_id=record.sequence_id,
                        curve=curve,
                        mse=mean_squared_error(pred[:, column], truth),
                        dof=dof,
                    ))
        return results

    def evaluate(self, experiment: ExperimentConfig, dataset: Dataset, predictions_dir: Union[str, Path],
                 out_dir: Union[str, Path], methods: Optional[Sequence[str]] = None,
                 split: str = "test") -> pd.DataFrame:
        """
        Write E(t) curves and the final-error summary table

        Args:
            experiment: Experiment configuration (eps_rel, optional bound)
            dataset: Dataset holding the true loads
            predictions_dir: Directory with one subdirectory of CSVs per method
            out_dir: Run directory (evaluation/ is written inside)
            methods: Methods to score (discovered when omitted)
            split: Which split was predicted

        Returns:
            Summary DataFrame (also written to evaluation/summary.csv)

        Raises:
            MissingArtifactError: Prediction files absent
            ToleranceExceededError: An RKF final error exceeds evaluation.noiseless_bound
        """
        out_dir = Path(out_dir) / "evaluation"
        methods = list(methods) if methods else self.discover_methods(predictions_dir)
        results = self.score(experiment, dataset, predictions_dir, methods, split)

        for result in results:
            write_frame(
                error_curve_frame(result.curve),
                out_dir / "curves" / result.method / f"{result.sequence_id}_dof{result.dof + 1}.csv",
            )
        summary = summarize(results)
        write_frame(summary, out_dir / "summary.csv")
        logger.info(f"Evaluated {len(methods)} methods on {len(dataset.subset(split))} sequences:\n{summary.to_string(index=False)}")

        bound = experiment.evaluation.noiseless_bound
        if bound is not None and "rkf" in summary.columns:
            worst = float(summary["rkf"].max())
            if worst > bound:
                raise ToleranceExceededError(f"RKF final error {worst:.4g} exceeds the bound {bound:.4g}")
        return summary


# Global evaluation service instance
evaluation_service = EvaluationService()
