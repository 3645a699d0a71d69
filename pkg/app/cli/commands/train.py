import logging
from pathlib import Path

import click

from app.cli.options import dataset_dir, echo_dry_run, experiment_options, handle_errors, resolve_experiment
from app.services.dataset_service import dataset_service
from app.services.training_service import training_service

logger = logging.getLogger(__name__)


############################################################################################
                                # Network training
############################################################################################

@click.command("train")
@experiment_options
@click.option("--cell", type=click.Choice(["lstm", "gru", "conv"]), required=True, help="Network kind to train")
@click.option("--data", "data_dir", type=click.Path(file_okay=False), default=None,
              help="Dataset directory (defaults to <run>/dataset)")
@handle_errors
def command(config_path, preset, scenario, seed, out_dir, dry_run, cell, data_dir):
    """Train one network on the training split and write its checkpoint and loss curve."""
    experiment = resolve_experiment(config_path, preset, scenario, seed, out_dir)
    network = training_service.network_config(experiment, cell)
    if dry_run:
        echo_dry_run(experiment, "train")
        click.echo(network.model_dump_json(indent=2))
        return

    dataset = dataset_service.load(dataset_dir(experiment, data_dir), experiment.building)
    _, report = training_service.train(experiment, dataset, cell, experiment.output_dir)
    click.echo(
        f"Trained {cell}: best epoch {report.best_epoch}, best loss {report.best_val_loss:.6g}, "
        f"model at {Path(experiment.output_dir) / 'models' / f'{cell}.ckpt'}"
    )
