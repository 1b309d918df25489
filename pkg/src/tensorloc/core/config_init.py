import importlib.resources as resources
import shutil
from pathlib import Path

from tensorloc.core.errors import ConfigError

TEMPLATES = (
    ("config.yaml", None),
    ("default.yaml", "logging"),
    ("default.yaml", "run"),
    ("default.yaml", "selection"),
)


def init_project_config(force: bool = False, root: Path | None = None) -> Path:
    """
    Initialize ./conf with editable copies of the main presets.

    Creates:
      ./conf/config.yaml
      ./conf/logging/default.yaml
      ./conf/run/default.yaml
      ./conf/selection/default.yaml

    Groups not copied (generator, estimators, ...) keep resolving to the
    packaged presets through the search path.
    """
    conf_dir = (root or Path.cwd()) / "conf"

    if conf_dir.exists() and not force:
        raise ConfigError("conf/ already exists. Use --force to overwrite.")

    package = resources.files("tensorloc.conf")
    for name, group in TEMPLATES:
        src = package / group / name if group else package / name
        dest_dir = conf_dir / group if group else conf_dir
        dest_dir.mkdir(parents=True, exist_ok=True)
        with resources.as_file(src) as path:
            shutil.copy(path, dest_dir / name)

    return conf_dir
