import json

import click

from app.cli.options import handle_errors
from app.config.settings import settings
from app.models.schemas import ExperimentConfig


@click.command("schema")
@click.option("--example", type=click.Choice(sorted(settings.PRESETS)), default=None,
              help="Print a complete example document for this preset instead")
@click.option("--scenario", type=click.Choice(sorted(settings.SCENARIO_INPUT_DOFS)), default="shaker",
              show_default=True)
@handle_errors
def command(example, scenario):
    """Print the JSON schema of the experiment document."""
    if example:
        click.echo(settings.experiment(example, scenario).model_dump_json(indent=2))
        return
    click.echo(json.dumps(ExperimentConfig.model_json_schema(), indent=2))
