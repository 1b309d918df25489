from pathlib import Path

import click
from loguru import logger

from tensorloc.cli.utils import parse_k, read_lattice, read_localization, translate_errors
from tensorloc.core.errors import ConfigError
from tensorloc.core.estimator import localize, precision, sample_covariance
from tensorloc.core.matrix_io import FORMATS, read_data, read_matrix, write_matrix
from tensorloc.core.metrics import NORMS
from tensorloc.core.selection import SelectionConfig, select_scaling


@click.command("estimate")
@click.argument("input_path", metavar="INPUT", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--data",
    "is_data",
    is_flag=True,
    help="INPUT is an n x p data CSV rather than a covariance matrix.",
)
@click.option(
    "--lattice",
    "lattice_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Lattice JSON: {\"dims\": [...], \"active\": [...]}.",
)
@click.option(
    "--h",
    "h_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Localization function JSON (default: tapering, c=0.5).",
)
@click.option("--k", "k_text", default=None, help="Scaling vector '3,4', a single integer, or 'auto'.")
@click.option("--psd", is_flag=True, help="Project the estimate onto the PSD cone.")
@click.option("--precision", "as_precision", is_flag=True, help="Write the inverse of the estimate.")
@click.option("--splits", type=click.IntRange(min=1), default=50, show_default=True)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=0, show_default=True)
@click.option("--norm", type=click.Choice(sorted(NORMS)), default="l1", show_default=True)
@click.option(
    "--out",
    required=True,
    type=click.Path(dir_okay=False, path_type=Path),
    help="Output matrix file.",
)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None, help="Output format (default: by suffix).")
@translate_errors
def cmd_estimate(input_path, is_data, lattice_path, h_path, k_text, psd, as_precision, splits, seed, norm, out, fmt):
    """
    Localize a sample covariance on a lattice.

    INPUT is a covariance matrix (CSV or TCOV binary) or, with --data, an
    observation table. Selecting k with 'auto' needs the observations.
    """
    lattice = read_lattice(lattice_path)
    h = read_localization(h_path, lattice.d)
    k = parse_k(k_text if k_text is not None else ("auto" if is_data else None), lattice.d)
    if k is None:
        raise ConfigError("--k is required when INPUT is a covariance matrix")

    if is_data:
        data = read_data(input_path)
        s = sample_covariance(data)
    else:
        if k == "auto":
            raise ConfigError("--k auto needs observations; pass a data file with --data")
        s = read_matrix(input_path)

    if k == "auto":
        cfg = SelectionConfig(splits=splits, seed=seed, norm=norm)
        k = select_scaling(data, lattice, h, cfg).selected
        click.echo(f"selected k = {','.join(str(v) for v in k)}")

    estimate = localize(s, lattice, h, k, psd=psd)
    if as_precision:
        estimate = precision(estimate)

    write_matrix(estimate, out, fmt)
    logger.success("Wrote {} x {} estimate (k={}) to {}", *estimate.shape, k, out)
