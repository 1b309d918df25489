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
    with_defaults,
    write_csv,
)
from tensorloc.core.assimilate import run_eddy_benchmark
from tensorloc.core.errors import ConfigError
from tensorloc.core.experiment import (
    experiment_truth,
    generator_from_config,
    selection_from_config,
)
from tensorloc.core.hydra_loader import config_hash, load_hydra_config, section
from tensorloc.core.pipeline import parse_estimators
from tensorloc.core.runner import save_run_metadata

DEFAULT_OUT = Path("results/assimilate.csv")

GROUP_DEFAULTS = {"generator": "eddy", "estimators": "eddy"}


@click.command(name="assimilate", context_settings=OVERRIDE_CONTEXT)
@config_options
@click.option("--progress/--no-progress", default=True, help="Show a replicate progress bar.")
@click.pass_context
@translate_errors
def cmd_assimilate(ctx, config_file, seed, threads, out, progress):
    """
    3DVar reconstruction benchmark.

    Each replicate trains every estimator on n_train fields, observes a
    random fraction of sites of a fresh field with noise and scores the
    reconstruction of the unobserved sites. OUT holds the summary table,
    OUT_replicates the per-replicate errors.
    """
    overrides = with_defaults(list(ctx.args), GROUP_DEFAULTS)
    if seed is not None:
        overrides.append(f"assimilate.seed={seed}")
    if threads is not None:
        overrides.append(f"run.threads={threads}")

    cfg = load_hydra_config(overrides, config_file)
    bench = section(cfg, "assimilate")
    run = section(cfg, "run")
    try:
        generator = generator_from_config(section(cfg, "generator"))
        selection = selection_from_config(section(cfg, "selection"))
        estimators = parse_estimators(section(cfg, "estimators").get("items") or [], generator.lattice)
        n_train = int(bench["n_train"])
        obs_fraction = float(bench["obs_fraction"])
        noise_var = float(bench["noise_var"])
        reps = int(bench["reps"])
        bench_seed = int(bench["seed"])
    except KeyError as e:
        raise ConfigError(f"assimilate: missing key {e}") from None

    generator, truth, _ = experiment_truth(generator, bench_seed)
    digest = config_hash(cfg)
    out = out or DEFAULT_OUT

    clock = Stopwatch()
    result = run_eddy_benchmark(
        truth,
        generator.lattice,
        n_train=n_train,
        obs_fraction=obs_fraction,
        noise_var=noise_var,
        estimators=estimators,
        reps=reps,
        seed=bench_seed,
        selection=selection,
        threads=int(run.get("threads", 1)),
        progress=progress,
        log_level=root_log_level(ctx),
    )
    took = str(clock)

    write_csv(result.summary, out, digest)
    write_csv(result.replicates, sibling_path(out, "_replicates"), digest)
    save_run_metadata(out, cfg, digest)

    click.echo(result.summary.to_string(index=False))
    logger.success("assimilate: {} reps in {} -> {}", reps, took, out)
