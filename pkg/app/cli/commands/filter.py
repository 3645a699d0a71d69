import logging

import click

from app.cli.options import dataset_dir, echo_dry_run, experiment_options, handle_errors, resolve_experiment
from app.services.dataset_service import dataset_service
from app.services.filter_service import filter_service

logger = logging.getLogger(__name__)


############################################################################################
                                # Residual Kalman filter
############################################################################################

@click.command("filter")
@experiment_options
@click.option("--data", "data_dir", type=click.Path(file_okay=False), default=None,
              help="Dataset directory (defaults to <run>/dataset)")
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test", show_default=True)
@handle_errors
def command(config_path, preset, scenario, seed, out_dir, dry_run, data_dir, split):
    """Run the residual Kalman filter on every sequence of a split."""
    experiment = resolve_experiment(config_path, preset, scenario, seed, out_dir)
    if dry_run:
        echo_dry_run(experiment, "filter")
        click.echo(experiment.filter.model_dump_json(indent=2))
        return

    dataset = dataset_service.load(dataset_dir(experiment, data_dir), experiment.building)
    traces = filter_service.run(experiment, dataset, experiment.output_dir, split=split)
    click.echo(f"Filtered {len(traces)} sequences into {experiment.output_dir}")
