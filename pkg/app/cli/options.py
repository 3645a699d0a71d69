"""
Options and error handling shared by every subcommand.
"""

import functools
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Optional

import click

from app.config.settings import settings
from app.models.schemas import ExperimentConfig
from app.utils.exceptions import LoadIdError

logger = logging.getLogger(__name__)


def experiment_options(fn: Callable) -> Callable:
    """Attach --config/--preset/--scenario/--seed/--out/--dry-run to a command"""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="Experiment JSON document (overrides the preset)"),
        click.option("--preset", type=click.Choice(sorted(settings.PRESETS)), default="desk", show_default=True,
                     help="Preset used when no config file is given"),
        click.option("--scenario", type=click.Choice(sorted(settings.SCENARIO_INPUT_DOFS)), default="shaker",
                     show_default=True, help="Scenario used when no config file is given"),
        click.option("--seed", type=int, default=None, help="Master seed override"),
        click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                     help="Run directory override"),
        click.option("--dry-run", is_flag=True, default=False, help="Validate the configuration and stop"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def resolve_experiment(config_path: Optional[str], preset: str, scenario: str, seed: Optional[int],
                       out_dir: Optional[str]) -> ExperimentConfig:
    return settings.load_experiment(config_path, preset=preset, scenario=scenario, seed=seed, output_dir=out_dir)


def echo_dry_run(experiment: ExperimentConfig, stage: str) -> None:
    """Print what a stage would do and the resolved configuration"""
    summary = {
        "stage": stage,
        "name": experiment.name,
        "seed": experiment.seed,
        "output_dir": experiment.output_dir,
        "scenario": experiment.scenario.kind,
        "sequences": experiment.scenario.count,
        "samples_per_sequence": experiment.scenario.n_samples,
        "networks": sorted(experiment.networks),
    }
    click.echo(json.dumps(summary, indent=2))
    logger.info(f"Dry run of {stage}: configuration is valid")


def dataset_dir(experiment: ExperimentConfig, data_dir: Optional[str]) -> Path:
    return Path(data_dir) if data_dir else Path(experiment.output_dir) / "dataset"


def handle_errors(fn: Callable) -> Callable:
    """Turn workbench errors into their exit codes with a one-line message"""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except LoadIdError as e:
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"Error: {e}", err=True)
            sys.exit(e.exit_code)
        except click.exceptions.ClickException:
            raise
        except Exception as e:
            logger.exception(f"Unexpected failure in {fn.__name__}")
            click.echo(f"Unexpected error: {e}", err=True)
            sys.exit(1)

    return wrapper
