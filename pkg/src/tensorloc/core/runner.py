# src/tensorloc/core/runner.py
"""
Replicate pool for Monte Carlo drivers.

Each replicate gets its own child of ``SeedSequence(seed)``.  Work runs
inline for one thread, otherwise on a multiprocessing pool whose workers
receive the shared, read-only context once through the initializer.
Results come back in replicate order, so aggregates do not depend on the
number of workers.
"""

from collections.abc import Callable, Sequence
from multiprocessing import Pool
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from omegaconf import DictConfig, OmegaConf
from tqdm import tqdm

from tensorloc.core.configure_logging import configure_logging

Task = Callable[[Any, int, np.random.SeedSequence], Any]

_WORKER_CONTEXT: Any = None
_WORKER_TASK: Task | None = None


def spawn_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(int(count))


def _init_worker(task: Task, context: Any, log_level: str):
    global _WORKER_CONTEXT, _WORKER_TASK
    _WORKER_CONTEXT = context
    _WORKER_TASK = task
    configure_logging(log_level, worker=True)


def _run_one(args: tuple[int, np.random.SeedSequence]):
    index, seed_seq = args
    return _WORKER_TASK(_WORKER_CONTEXT, index, seed_seq)


def run_replicates(
    task: Task,
    context: Any,
    seeds: Sequence[np.random.SeedSequence],
    threads: int = 1,
    desc: str = "replicates",
    log_level: str = "WARNING",
    progress: bool = True,
) -> list[Any]:
    """
    Run ``task(context, index, seed_seq)`` for every seed; results in index order.

    ``task`` must be a module-level function so worker processes can import it.
    """
    jobs = list(enumerate(seeds))
    threads = max(1, int(threads))
    logger.debug("Launching {} {} (threads={})", len(jobs), desc, threads)

    bar = tqdm(
        total=len(jobs),
        desc=desc,
        unit="rep",
        dynamic_ncols=True,
        disable=not progress,
        leave=False,
    )

    results = []
    with bar:
        if threads == 1 or len(jobs) <= 1:
            for index, seed_seq in jobs:
                results.append(task(context, index, seed_seq))
                bar.update(1)
        else:
            with Pool(
                processes=min(threads, len(jobs)),
                initializer=_init_worker,
                initargs=(task, context, log_level),
            ) as pool:
                for result in pool.imap(_run_one, jobs):
                    results.append(result)
                    bar.update(1)

    return results


def save_run_metadata(out_path: Path, cfg: DictConfig | dict, config_hash: str) -> Path:
    """Resolved configuration next to an output file: <out>.meta.yaml."""
    out_path = Path(out_path)
    meta_path = out_path.with_name(out_path.name + ".meta.yaml")
    body = OmegaConf.create(
        {
            "config_sha256": config_hash,
            "config": OmegaConf.to_container(cfg, resolve=True) if isinstance(cfg, DictConfig) else cfg,
        }
    )
    OmegaConf.save(body, meta_path)
    logger.debug("Run metadata written to {}", meta_path)
    return meta_path
