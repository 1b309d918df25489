from pathlib import Path

import click
from loguru import logger

from tensorloc.cli.utils import OVERRIDE_CONTEXT, translate_errors
from tensorloc.core.experiment import experiment_truth, generator_from_config
from tensorloc.core.hydra_loader import load_hydra_config, section
from tensorloc.core.matrix_io import FORMATS, write_data, write_matrix
from tensorloc.core.model import DECAY_FAMILIES, DecaySpec, class_check, sample_gaussian


def _diagonal_scalings(dims: tuple[int, ...]) -> list[tuple[int, ...]]:
    return [tuple(min(k, p) for p in dims) for k in range(1, max(dims) + 1)]


@click.command(name="gen", context_settings=OVERRIDE_CONTEXT)
@click.option(
    "--config",
    "config_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Experiment file (JSON or YAML) merged over the presets.",
)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=None, help="Overrides run.seed.")
@click.option("--out", required=True, type=click.Path(dir_okay=False, path_type=Path), help="Truth matrix file.")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default=None, help="Matrix format (default: by suffix).")
@click.option("--samples", type=click.IntRange(min=1), default=None, help="Also draw this many Gaussian rows.")
@click.option("--data-out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--decay", type=click.Choice(DECAY_FAMILIES), default=None, help="Run a class check against this decay.")
@click.option("--param", "params", type=float, multiple=True, help="Decay alpha/beta (one, or one per order).")
@click.option("--lag", "lags", type=click.IntRange(min=1), multiple=True, help="Report 1-D tail sums at these lags.")
@click.pass_context
@translate_errors
def cmd_gen(ctx, config_file, seed, out, fmt, samples, data_out, decay, params, lags):
    """
    Write the configured truth covariance.

    The generator spec, with its drawn amplitudes, is written next to OUT
    as OUT.generator.json so the truth can be rebuilt exactly.
    """
    overrides = list(ctx.args)
    if seed is not None:
        overrides.append(f"run.seed={seed}")
    cfg = load_hydra_config(overrides, config_file)
    run_seed = int(section(cfg, "run").get("seed", 0))

    generator, truth, rep_root = experiment_truth(generator_from_config(section(cfg, "generator")), run_seed)
    lattice = generator.lattice

    write_matrix(truth, out, fmt)
    out.with_name(out.name + ".generator.json").write_text(generator.to_json())
    logger.success("Wrote {} truth ({} sites) to {}", generator.setting, lattice.n_sites, out)

    if samples is not None:
        if data_out is None:
            raise click.UsageError("--samples needs --data-out")
        write_data(sample_gaussian(truth, samples, rep_root), data_out)
        logger.success("Wrote {} samples to {}", samples, data_out)

    if decay is not None or lags:
        family = decay or "polynomial"
        values = tuple(params) or (1.0,)
        if len(values) == 1:
            values = values * lattice.d
        tau = DecaySpec(family, values, lattice.dims)
        report = class_check(truth, lattice, tau, _diagonal_scalings(lattice.dims), lags=lags)

        if decay is not None:
            click.echo(report.tails.to_string(index=False))
            click.echo(f"constant C = {report.constant:.6g}, passes = {report.passes}")
        click.echo(f"eigenvalues in [{report.lambda_min:.6g}, {report.lambda_max:.6g}]")
        for lag, tail in report.lag_tails.items():
            click.echo(f"1-D tail at lag {lag}: {tail:.6g}")
