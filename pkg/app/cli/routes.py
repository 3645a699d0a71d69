import click

from app.cli.commands import compare, evaluate, filter, generate, schema, train
from app.config.config import config
from app.config.logger import setup_logging
from app.config.settings import settings


@click.group(name=settings.APP_NAME, help=settings.APP_DESCRIPTION)
@click.version_option(settings.APP_VERSION, prog_name=settings.APP_NAME)
@click.option("--log-level", default=None, help="Overrides LOADID_LOG_LEVEL",
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"], case_sensitive=False))
def cli(log_level):
    runtime = config.get_runtime_config()
    if not config.validate_config():
        raise click.UsageError("Invalid LOADID_LOG_LEVEL in the environment")
    setup_logging(log_level or runtime["log_level"], runtime["log_file"])


# Register all subcommands
cli.add_command(generate.command)
cli.add_command(train.command)
cli.add_command(filter.command)
cli.add_command(evaluate.command)
cli.add_command(compare.command)
cli.add_command(schema.command)
