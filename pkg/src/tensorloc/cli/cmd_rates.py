from pathlib import Path

import click
from loguru import logger

from tensorloc.cli.utils import (
    OVERRIDE_CONTEXT,
    Stopwatch,
    config_options,
    root_log_level,
    translate_errors,
    write_csv,
)
from tensorloc.core.experiment import RatesConfig, run_rates
from tensorloc.core.hydra_loader import config_hash, load_hydra_config
from tensorloc.core.runner import save_run_metadata

DEFAULT_OUT = Path("results/rates.csv")


@click.command(name="rates", context_settings=OVERRIDE_CONTEXT)
@config_options
@click.option("--progress/--no-progress", default=True, help="Show a replicate progress bar.")
@click.pass_context
@translate_errors
def cmd_rates(ctx, config_file, seed, threads, out, progress):
    """
    Spectral-norm convergence rate of the localization estimator at k*(n).

    The table reports mean squared error per n together with the fitted
    log-log slope and the slope the decay family predicts.
    """
    overrides = list(ctx.args)
    if seed is not None:
        overrides.append(f"rates.seed={seed}")
    if threads is not None:
        overrides.append(f"run.threads={threads}")

    cfg = load_hydra_config(overrides, config_file)
    rates = RatesConfig.from_config(cfg)
    digest = config_hash(cfg)
    out = out or DEFAULT_OUT

    clock = Stopwatch()
    table = run_rates(rates, progress=progress, log_level=root_log_level(ctx))
    took = str(clock)

    write_csv(table, out, digest)
    save_run_metadata(out, cfg, digest)

    click.echo(table.to_string(index=False))
    logger.success(
        "rates: slope {:.3f} vs target {:.3f} in {} -> {}",
        table["fitted_slope"].iloc[0],
        rates.target_slope,
        took,
        out,
    )
