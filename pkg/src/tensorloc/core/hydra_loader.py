# src/tensorloc/core/hydra_loader.py

import hashlib
import json
import os
from pathlib import Path

import yaml
from hydra import compose, initialize_config_dir
from hydra.errors import HydraException
from loguru import logger
from omegaconf import DictConfig, OmegaConf
from omegaconf.errors import OmegaConfBaseException

from tensorloc.core.errors import ConfigError

SCHEMA_VERSION = 1

TOP_LEVEL_KEYS = {
    "schema_version",
    "logging",
    "generator",
    "distribution",
    "estimators",
    "selection",
    "run",
    "assimilate",
    "rates",
}


def _config_dirs() -> tuple[Path, list[str]]:
    cwd = Path.cwd()
    xdg_config_home = Path(os.environ.get("XDG_CONFIG_HOME", Path.home() / ".config"))

    # -------- Primary config directory --------
    if (cwd / "conf").exists():
        primary = cwd / "conf"
    else:
        import tensorloc

        primary = Path(tensorloc.__file__).parent / "conf"

    # -------- Secondary search paths --------
    search_paths = []
    user_conf = xdg_config_home / "tensorloc" / "conf"
    if user_conf.exists():
        search_paths.append(f"file://{user_conf}")
    search_paths.append("pkg://tensorloc.conf")
    return primary, search_paths


def load_config_file(path: str | Path) -> DictConfig:
    """Experiment file in JSON or YAML; parse errors carry line and column."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()

    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    else:
        try:
            data = yaml.safe_load(text)
        except yaml.MarkedYAMLError as e:
            mark = e.problem_mark
            where = f"line {mark.line + 1} column {mark.column + 1}" if mark else "unknown position"
            raise ConfigError(f"{path}: {where}: {e.problem}") from None

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return OmegaConf.create(data)


def validate_config(cfg: DictConfig) -> DictConfig:
    unknown = sorted(set(cfg.keys()) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {unknown}")
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version}")
    return cfg


def load_hydra_config(overrides=None, config_file: str | Path | None = None) -> DictConfig:
    """
    Compose the packaged presets, then layer an experiment file and CLI overrides.

    Primary config source:
      1. ./conf (if present)
      2. the packaged tensorloc/conf

    Secondary (fallback) sources:
      - ~/.config/tensorloc/conf
      - pkg://tensorloc.conf
    """
    overrides = list(overrides or [])
    primary, search_paths = _config_dirs()
    hydra_overrides = [f"hydra.searchpath=[{','.join(search_paths)}]"]

    try:
        with initialize_config_dir(
            version_base=None,
            config_dir=str(primary),
            job_name="tensorloc",
        ):
            cfg = compose(config_name="config", overrides=hydra_overrides + overrides)
    except HydraException as e:
        raise ConfigError(str(e)) from None

    if config_file is not None:
        user = load_config_file(config_file)
        try:
            cfg = OmegaConf.merge(cfg, user)
            # command-line overrides win over the experiment file
            dotlist = [o for o in overrides if "=" in o and not o.startswith(("+", "~"))]
            dotlist = [o for o in dotlist if o.split("=", 1)[0] not in _group_names(primary)]
            cfg = OmegaConf.merge(cfg, OmegaConf.from_dotlist(dotlist))
        except OmegaConfBaseException as e:
            raise ConfigError(f"{config_file}: {e}") from None

    logger.debug("Configuration composed from {} with overrides {}", primary, overrides)
    return validate_config(cfg)


def _group_names(conf_dir: Path) -> set[str]:
    return {p.name for p in conf_dir.iterdir() if p.is_dir()} if conf_dir.exists() else set()


def config_hash(cfg: DictConfig) -> str:
    """
    sha256 of the resolved configuration rendered as key-sorted YAML.

    Logging level and worker count do not change results and are left out.
    """
    data = OmegaConf.to_container(cfg, resolve=True)
    data.pop("logging", None)
    if isinstance(data.get("run"), dict):
        data["run"].pop("threads", None)
    text = yaml.safe_dump(data, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def section(cfg: DictConfig, key: str) -> dict:
    """Plain-dict copy of a config section (raises with the key path if missing)."""
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"missing config section '{key}'")
    try:
        return OmegaConf.to_container(cfg[key], resolve=True)
    except OmegaConfBaseException as e:
        raise ConfigError(f"{key}: {e}") from None
