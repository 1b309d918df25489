from pathlib import Path

import click
from loguru import logger

from tensorloc.cli.utils import read_lattice, read_localization, translate_errors, write_csv
from tensorloc.core.errors import ShapeError
from tensorloc.core.lattice import LatticeSpec
from tensorloc.core.matrix_io import read_data
from tensorloc.core.metrics import NORMS
from tensorloc.core.selection import SelectionConfig, select_bandwidth_1d, select_scaling


@click.command("select")
@click.argument("data_path", metavar="DATA", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--lattice",
    "lattice_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Lattice JSON; defaults to a 1-order lattice over the data columns.",
)
@click.option(
    "--h",
    "h_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Localization function JSON (default: tapering, c=0.5).",
)
@click.option(
    "--vectorized",
    type=click.Choice(["banding", "tapering"]),
    default=None,
    help="Select the width of a 1-D comparator on the vectorized index instead.",
)
@click.option("--splits", type=click.IntRange(min=1), default=50, show_default=True)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=0, show_default=True)
@click.option("--norm", type=click.Choice(sorted(NORMS)), default="l1", show_default=True)
@click.option("--k-max", type=click.IntRange(min=1), default=None, help="Cap on each k_l of the grid.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Score table CSV.")
@translate_errors
def cmd_select(data_path, lattice_path, h_path, vectorized, splits, seed, norm, k_max, out):
    """
    Choose the scaling vector by random data splitting.

    Every candidate is scored against the held-out sample covariance on
    the same splits; the table holds the per-candidate total, mean and
    standard deviation of the loss.
    """
    data = read_data(data_path)
    cfg = SelectionConfig(splits=splits, seed=seed, norm=norm, k_max=k_max)

    if vectorized:
        result = select_bandwidth_1d(data, vectorized, None, cfg)
        label = str(result.selected)
    else:
        lattice = read_lattice(lattice_path) if lattice_path else LatticeSpec(dims=(data.shape[1],))
        if lattice.n_sites != data.shape[1]:
            raise ShapeError(f"data has {data.shape[1]} columns, lattice has {lattice.n_sites} sites")
        h = read_localization(h_path, lattice.d)
        result = select_scaling(data, lattice, h, cfg)
        label = ",".join(str(v) for v in result.selected)

    click.echo(f"selected k = {label}")
    if out is not None:
        write_csv(result.scores, out)
        logger.success("Wrote {} candidate scores to {}", len(result.scores), out)
