import click
import numpy as np
import scipy

from tensorloc.core.configure_logging import LOG_LEVELS, configure_logging, env_log_level
from tensorloc.version import __version__

from .cmd_assimilate import cmd_assimilate
from .cmd_estimate import cmd_estimate
from .cmd_gen import cmd_gen
from .cmd_init import cmd_init
from .cmd_rates import cmd_rates
from .cmd_select import cmd_select
from .cmd_simulate import cmd_simulate

early_level = env_log_level("INFO")
configure_logging(early_level)


@click.group(invoke_without_command=True)
@click.option(
    "--log-level",
    type=click.Choice(sorted(LOG_LEVELS), case_sensitive=False),
    default=None,
    help="Set logging verbosity.",
)
@click.version_option(version=__version__, prog_name="tensorloc")
@click.pass_context
def cli(ctx, log_level: str | None):
    """TENSORLOC - localized covariance estimation on tensor lattices

    Examples:

    \b
    tloc init                                    <- copy editable presets into ./conf
    tloc gen --out truth.csv                     <- write the configured truth matrix
    tloc gen generator=setting2 --samples 500 --data-out x.csv
    tloc estimate x.csv --data --lattice lat.json --k auto --out est.csv
    tloc select x.csv --lattice lat.json --out scores.csv
    tloc simulate generator=setting2 estimators=setting2 run.n=[500]
    tloc rates rates.reps=20 --threads 4         <- convergence-rate study
    tloc assimilate assimilate.reps=5            <- 3DVar benchmark on the eddy field
    """
    ctx.ensure_object(dict)

    level = (log_level or early_level).upper()
    configure_logging(level)
    ctx.obj["log_level"] = level

    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


cli.add_command(cmd_init)
cli.add_command(cmd_gen)
cli.add_command(cmd_estimate)
cli.add_command(cmd_select)
cli.add_command(cmd_simulate)
cli.add_command(cmd_rates)
cli.add_command(cmd_assimilate)


@cli.command()
def info():
    """Show tensorloc and numerical library versions."""
    click.echo(f"tensorloc version: {__version__}")
    click.echo(f"numpy version:     {np.__version__}")
    click.echo(f"scipy version:     {scipy.__version__}")
