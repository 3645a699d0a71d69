import logging
from pathlib import Path

import click

from app.cli.options import dataset_dir, echo_dry_run, experiment_options, handle_errors, resolve_experiment
from app.services.dataset_service import dataset_service

logger = logging.getLogger(__name__)


############################################################################################
                                # Dataset generation
############################################################################################

@click.command("generate")
@experiment_options
@click.option("--nsr", type=float, default=None, help="Noise-to-signal ratio override")
@handle_errors
def command(config_path, preset, scenario, seed, out_dir, dry_run, nsr):
    """Simulate the scenario's sequences and write them with their manifest."""
    experiment = resolve_experiment(config_path, preset, scenario, seed, out_dir)
    if dry_run:
        echo_dry_run(experiment, "generate")
        return

    dataset, manifest_path = dataset_service.generate(experiment, dataset_dir(experiment, None), nsr=nsr)
    split = {name: len(indices) for name, indices in dataset.split.items()}
    click.echo(f"Wrote {len(dataset.sequences)} sequences (split {split}) to {Path(manifest_path).parent}")
