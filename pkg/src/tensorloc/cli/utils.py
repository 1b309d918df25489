# src/tensorloc/cli/utils.py

import functools
import time
from pathlib import Path

import click
import pandas as pd
from loguru import logger

from tensorloc.core.errors import (
    ConfigError,
    DomainError,
    LatticeIndexError,
    NumericalError,
    ShapeError,
)
from tensorloc.core.lattice import LatticeSpec
from tensorloc.core.localfn import LocalizationFunction
from tensorloc.version import __version__

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

OVERRIDE_CONTEXT = dict(ignore_unknown_options=True, allow_extra_args=True)

# ---------------------------------------------------------------------
# Error translation
# ---------------------------------------------------------------------


class ConfigFailure(click.ClickException):
    exit_code = EXIT_CONFIG


class NumericalFailure(click.ClickException):
    exit_code = EXIT_NUMERICAL


def translate_errors(fn):
    """Map library errors onto CLI exit codes (2 config/input, 3 numerical)."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ShapeError, DomainError, LatticeIndexError) as e:
            raise ConfigFailure(str(e)) from None
        except NumericalError as e:
            raise NumericalFailure(str(e)) from None

    return wrapper


# ---------------------------------------------------------------------
# Shared options
# ---------------------------------------------------------------------


def config_options(fn):
    """--config / --seed / --threads / --out, shared by the experiment commands."""
    fn = click.option(
        "--out",
        "out",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help="Output CSV path.",
    )(fn)
    fn = click.option(
        "--threads",
        type=click.IntRange(min=1),
        default=None,
        help="Worker processes for replicates (run.threads).",
    )(fn)
    fn = click.option(
        "--seed",
        type=click.IntRange(min=0, max=2**64 - 1),
        default=None,
        help="Master seed for the run.",
    )(fn)
    fn = click.option(
        "--config",
        "config_file",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        default=None,
        help="Experiment file (JSON or YAML) merged over the presets.",
    )(fn)
    return fn


def root_log_level(ctx: click.Context) -> str:
    obj = ctx.find_root().obj or {}
    return obj.get("log_level") or "WARNING"


def with_defaults(overrides: list[str], defaults: dict[str, str]) -> list[str]:
    """Prepend group selections the user did not override."""
    given = {o.split("=", 1)[0].lstrip("+~") for o in overrides if "=" in o}
    return [f"{k}={v}" for k, v in defaults.items() if k not in given] + list(overrides)


# ---------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------


class Stopwatch:
    """Wall-clock timer for the driver commands; str() gives 37.2s or h:mm:ss."""

    def __init__(self):
        self._t0 = time.perf_counter()

    @property
    def seconds(self) -> float:
        return time.perf_counter() - self._t0

    def __str__(self) -> str:
        return render_duration(self.seconds)


def render_duration(seconds: float) -> str:
    if seconds < 60:
        return f"{seconds:.1f}s"
    whole = int(round(seconds))
    return f"{whole // 3600:d}:{whole // 60 % 60:02d}:{whole % 60:02d}"


def sibling_path(path: Path, suffix: str) -> Path:
    """results/run.csv + '_summary' -> results/run_summary.csv"""
    return path.with_name(f"{path.stem}{suffix}{path.suffix or '.csv'}")


def write_csv(frame: pd.DataFrame, path: Path, config_sha256: str | None = None) -> Path:
    """CSV with provenance comment lines ('#') ahead of the header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        if config_sha256:
            f.write(f"# config_sha256: {config_sha256}\n")
        f.write(f"# tensorloc {__version__}\n")
        frame.to_csv(f, index=False, float_format="%.10g")
    logger.debug("Wrote {} rows to {}", len(frame), path)
    return path


# ---------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------


def read_lattice(path: Path) -> LatticeSpec:
    return LatticeSpec.from_json(Path(path).read_text())


def read_localization(path: Path | None, arity: int) -> LocalizationFunction:
    if path is None:
        return LocalizationFunction.tapering(arity)
    h = LocalizationFunction.from_json(Path(path).read_text(), arity=arity)
    if h.arity != arity:
        raise ShapeError(f"localization arity {h.arity} != lattice order {arity}")
    return h


def parse_k(text: str | None, d: int) -> tuple[int, ...] | str | None:
    """'auto', a single integer (broadcast) or a comma-separated vector."""
    if text is None:
        return None
    text = text.strip().lower()
    if text == "auto":
        return "auto"
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--k must be 'auto' or comma-separated integers, got '{text}'") from None
    if len(values) == 1:
        values = values * d
    if len(values) != d:
        raise ShapeError(f"--k has {len(values)} entries for a {d}-order lattice")
    return values
