"""
Mini-batch training with Adam, z-score normalization and early stopping.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.models.schemas import NetworkConfig
from app.src.nets.network import (
    NetworkParams, Normalizer, copy_params, init_params, loss_and_gradients,
    named_arrays, network_forward, predict_load, zero_grads
)
from app.src.nets.optimizer import AdamState, adam_step
from app.src.nets.layers import mse_loss
from app.src.simulation.dataset import Dataset
from app.utils.exceptions import InvalidScenarioError, ShapeError, TrainingDivergenceError
from app.utils.seeding import substream
from app.utils.timing import Stopwatch

logger = logging.getLogger(__name__)


@dataclass
class TrainReport:
    """Loss histories in normalized units; val_loss is NaN when there is no validation split."""
    cell: str
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_val_loss: float = float("nan")
    wall_time: float = 0.0

    @property
    def minutes_per_1000_epochs(self) -> float:
        if self.stopped_epoch == 0:
            return 0.0
        return self.wall_time / 60.0 * 1000.0 / self.stopped_epoch


@dataclass(eq=False)
class TrainedModel:
    """Parameters plus everything needed to reuse them."""
    config: NetworkConfig
    params: NetworkParams
    normalizer: Normalizer
    seed: int
    report: Optional[TrainReport] = None

    def predict(self, x: np.ndarray) -> np.ndarray:
        return predict_load(self.params, self.config, x, self.normalizer)


def dataset_pairs(dataset: Dataset, split: str) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """(inputs, targets) of a split: measured accelerations and loads at the target DOFs."""
    records = dataset.subset(split)
    inputs = [r.measurements.noisy_accel for r in records]
    targets = [r.load.forces[:, dataset.target_dofs] for r in records]
    return inputs, targets


def batch_loss_and_gradients(config: NetworkConfig, params: NetworkParams, xs: Sequence[np.ndarray],
                             ys: Sequence[np.ndarray], seed) -> Tuple[float, NetworkParams]:
    """Mean loss and gradients over a batch; unequal lengths are averaged per sequence."""
    if len({x.shape[0] for x in xs}) == 1:
        return loss_and_gradients(config, params, np.stack(xs), np.stack(ys), training=True, seed=seed)

    rng = np.random.default_rng(seed)
    total = 0.0
    grads = zero_grads(params)
    flat = named_arrays(grads)
    for x, y in zip(xs, ys):
        loss, g = loss_and_gradients(config, params, x, y, training=True, seed=rng)
        total += loss
        for name, value in named_arrays(g).items():
            flat[name] += value
    for value in flat.values():
        value /= len(xs)
    return total / len(xs), grads


def evaluate_loss(config: NetworkConfig, params: NetworkParams, xs: Sequence[np.ndarray],
                  ys: Sequence[np.ndarray]) -> float:
    """Mean per-sequence MSE with dropout off."""
    losses = [mse_loss(network_forward(config, params, x, training=False)[0], y)[0] for x, y in zip(xs, ys)]
    return float(np.mean(losses))


def train(config: NetworkConfig, dataset: Dataset, seed: Optional[int] = None) -> Tuple[TrainedModel, TrainReport]:
    """
    Train one network on the dataset's train split.

    Normalization is fitted on the train split only. Validation loss is
    computed every epoch with dropout off; training stops after ``patience``
    epochs without improvement and the best parameters are returned. With no
    validation split the training loss is monitored instead.

    Args:
        config: Network settings
        dataset: Dataset with a non-empty train split
        seed: Master seed (defaults to config.seed, then dataset.seed)

    Returns:
        (TrainedModel, TrainReport)

    Raises:
        TrainingDivergenceError: Non-finite loss, with the epoch index
    """
    if seed is None:
        seed = config.seed if config.seed is not None else (dataset.seed or 0)

    train_x, train_y = dataset_pairs(dataset, "train")
    val_x, val_y = dataset_pairs(dataset, "val")
    if not train_x:
        raise InvalidScenarioError("Training needs at least one sequence in the train split")
    widths = {x.shape[1] for x in train_x + val_x}
    if len(widths) != 1:
        raise ShapeError(f"Sequences disagree on the channel count: {sorted(widths)}")

    normalizer = Normalizer.fit(train_x, train_y)
    train_x = [normalizer.normalize_inputs(x) for x in train_x]
    train_y = [normalizer.normalize_outputs(y) for y in train_y]
    val_x = [normalizer.normalize_inputs(x) for x in val_x]
    val_y = [normalizer.normalize_outputs(y) for y in val_y]

    params = init_params(config, train_x[0].shape[1], train_y[0].shape[1], substream(seed, "init", config.cell))
    report = TrainReport(cell=config.cell)
    model = TrainedModel(config=config, params=params, normalizer=normalizer, seed=seed, report=report)
    if config.max_epochs == 0:
        return model, report

    logger.info(
        f"Training {config.cell} ({config.layer_pairs} x {config.units} units, dropout {config.dropout}) "
        f"on {len(train_x)} sequences for up to {config.max_epochs} epochs"
    )

    state = AdamState()
    best_params = copy_params(params)
    best_monitor = float("inf")
    wait = 0

    with Stopwatch() as watch:
        for epoch in range(1, config.max_epochs + 1):
            order = substream(seed, "batch_order", config.cell, epoch).permutation(len(train_x))
            batch_losses = []
            for b, start in enumerate(range(0, len(order), config.batch_size)):
                members = order[start:start + config.batch_size]
                loss, grads = batch_loss_and_gradients(
                    config, params,
                    [train_x[i] for i in members], [train_y[i] for i in members],
                    seed=substream(seed, "dropout", config.cell, epoch, b),
                )
                if not np.isfinite(loss):
                    logger.error(f"{config.cell} training diverged at epoch {epoch}")
                    raise TrainingDivergenceError(f"Non-finite training loss for {config.cell}", epoch=epoch)
                adam_step(params, grads, state, config.learning_rate, config.beta1, config.beta2, config.adam_eps)
                batch_losses.append(loss)

            train_loss = float(np.mean(batch_losses))
            val_loss = evaluate_loss(config, params, val_x, val_y) if val_x else float("nan")
            report.train_loss.append(train_loss)
            report.val_loss.append(val_loss)
            report.stopped_epoch = epoch

            monitor = val_loss if val_x else train_loss
            if not np.isfinite(monitor):
                raise TrainingDivergenceError(f"Non-finite monitored loss for {config.cell}", epoch=epoch)
            if monitor < best_monitor:
                best_monitor = monitor
                best_params = copy_params(params)
                report.best_epoch = epoch
                wait = 0
            else:
                wait += 1
                if wait >= config.patience:
                    logger.info(f"Early stop of {config.cell} at epoch {epoch} (best epoch {report.best_epoch})")
                    break

            if epoch % 100 == 0:
                logger.debug(f"{config.cell} epoch {epoch}: train {train_loss:.6g}, val {val_loss:.6g}")

    report.best_val_loss = best_monitor
    report.wall_time = watch.elapsed
    model.params = best_params
    logger.info(f"Finished {config.cell}: {report.stopped_epoch} epochs, best loss {best_monitor:.6g}, {watch.elapsed:.1f}s")
    return model, report
