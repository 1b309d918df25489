import click
from loguru import logger

from tensorloc.cli.utils import translate_errors
from tensorloc.core.config_init import init_project_config


@click.command("init")
@click.option("--force", is_flag=True, help="Overwrite existing config.")
@translate_errors
def cmd_init(force: bool):
    """
    Initialize a tensorloc ./conf folder
    """
    conf_dir = init_project_config(force=force)
    logger.success("tensorloc configuration initialized in {}", conf_dir)
