import logging
from pathlib import Path

import click

from app.cli.options import echo_dry_run, experiment_options, handle_errors, resolve_experiment
from app.services.comparison_service import RUN_MANIFEST_NAME, comparison_service

logger = logging.getLogger(__name__)


############################################################################################
                                # Full comparison
############################################################################################

@click.command("compare")
@experiment_options
@click.option("--noise-sweep", is_flag=True, default=False,
              help="Also filter matched-seed datasets at every configured noise level")
@click.option("--cell", "cells", multiple=True, type=click.Choice(["lstm", "gru", "conv"]),
              help="Networks to train (all configured when omitted)")
@handle_errors
def command(config_path, preset, scenario, seed, out_dir, dry_run, noise_sweep, cells):
    """Generate, train every network, filter and evaluate into one report directory."""
    experiment = resolve_experiment(config_path, preset, scenario, seed, out_dir)
    if dry_run:
        echo_dry_run(experiment, "compare")
        return

    manifest = comparison_service.compare(
        experiment, experiment.output_dir, cells=list(cells) or None, noise_sweep=noise_sweep
    )
    click.echo(f"Comparison finished: {len(manifest.files)} files, manifest at "
               f"{Path(experiment.output_dir) / RUN_MANIFEST_NAME}")
