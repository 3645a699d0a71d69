import logging
from pathlib import Path

import click

from app.cli.options import dataset_dir, echo_dry_run, experiment_options, handle_errors, resolve_experiment
from app.services.dataset_service import dataset_service
from app.services.evaluation_service import evaluation_service

logger = logging.getLogger(__name__)


############################################################################################
                                # Evaluation
############################################################################################

@click.command("evaluate")
@experiment_options
@click.option("--predictions", "predictions_dir", type=click.Path(file_okay=False), default=None,
              help="Directory with one subdirectory per method (defaults to <run>/predictions)")
@click.option("--data", "data_dir", type=click.Path(file_okay=False), default=None,
              help="Dataset directory (defaults to <run>/dataset)")
@click.option("--method", "methods", multiple=True, help="Restrict to these methods")
@handle_errors
def command(config_path, preset, scenario, seed, out_dir, dry_run, predictions_dir, data_dir, methods):
    """Compute E(t) curves and the final-error summary for every method."""
    experiment = resolve_experiment(config_path, preset, scenario, seed, out_dir)
    if dry_run:
        echo_dry_run(experiment, "evaluate")
        return

    predictions_dir = Path(predictions_dir) if predictions_dir else Path(experiment.output_dir) / "predictions"
    dataset = dataset_service.load(dataset_dir(experiment, data_dir), experiment.building)
    summary = evaluation_service.evaluate(
        experiment, dataset, predictions_dir, experiment.output_dir, methods=list(methods) or None
    )
    click.echo(summary.to_string(index=False))
