from pathlib import Path

import click
from loguru import logger

from tensorloc.cli.utils import (
    OVERRIDE_CONTEXT,
    Stopwatch,
    config_options,
    root_log_level,
    sibling_path,
    translate_errors,
    write_csv,
)
from tensorloc.core.experiment import ExperimentConfig, run_simulation
from tensorloc.core.hydra_loader import config_hash, load_hydra_config
from tensorloc.core.runner import save_run_metadata

DEFAULT_OUT = Path("results/simulate.csv")


@click.command(name="simulate", context_settings=OVERRIDE_CONTEXT)
@config_options
@click.option("--progress/--no-progress", default=True, help="Show a replicate progress bar.")
@click.pass_context
@translate_errors
def cmd_simulate(ctx, config_file, seed, threads, out, progress):
    """
    Monte Carlo comparison of estimators on a synthetic truth.

    Extra KEY=VALUE arguments are Hydra overrides, e.g.
    generator=setting2 estimators=setting2 run.n=[100,500].

    Writes OUT (per replicate), OUT_summary and OUT.meta.yaml, plus
    OUT.generator.json holding the truth with its drawn amplitudes.
    """
    overrides = list(ctx.args)
    if seed is not None:
        overrides.append(f"run.seed={seed}")
    if threads is not None:
        overrides.append(f"run.threads={threads}")
    logger.debug("simulate overrides: {}", overrides)

    cfg = load_hydra_config(overrides, config_file)
    exp = ExperimentConfig.from_config(cfg)
    digest = config_hash(cfg)
    out = out or DEFAULT_OUT

    clock = Stopwatch()
    result = run_simulation(exp, progress=progress, log_level=root_log_level(ctx))
    took = str(clock)

    write_csv(result.replicates, out, digest)
    summary_path = write_csv(result.summary, sibling_path(out, "_summary"), digest)
    save_run_metadata(out, cfg, digest)
    generator_path = out.with_name(out.name + ".generator.json")
    generator_path.write_text(result.generator.to_json())

    logger.success(
        "simulate: {} rows in {} -> {} (summary {})",
        len(result.replicates),
        took,
        out,
        summary_path,
    )
