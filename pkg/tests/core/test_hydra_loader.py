import json

import pytest

from tensorloc.core.config_init import init_project_config
from tensorloc.core.errors import ConfigError
from tensorloc.core.hydra_loader import (
    SCHEMA_VERSION,
    config_hash,
    load_config_file,
    load_hydra_config,
    section,
)

# ============================================================
# Composition
# ============================================================


def test_default_composition(in_tmp):
    cfg = load_hydra_config()

    assert cfg.schema_version == SCHEMA_VERSION
    assert cfg.generator.setting == "gauss-kernel"
    assert cfg.selection.splits == 50
    assert [e["name"] for e in section(cfg, "estimators")["items"]] == ["proposed", "sample"]


def test_group_override(in_tmp):
    cfg = load_hydra_config(["generator=setting2", "run.reps=3"])
    assert cfg.generator.setting == "block-ar"
    assert list(cfg.generator.dims) == [10, 20]
    assert cfg.run.reps == 3


def test_unknown_override_is_a_config_error(in_tmp):
    with pytest.raises(ConfigError):
        load_hydra_config(["run.no_such_key=1"])
    with pytest.raises(ConfigError):
        load_hydra_config(["generator=no_such_preset"])


def test_project_conf_takes_precedence(in_tmp):
    init_project_config(root=in_tmp)
    run_yaml = in_tmp / "conf" / "run" / "default.yaml"
    run_yaml.write_text(run_yaml.read_text().replace("reps: 20", "reps: 7"))

    cfg = load_hydra_config()
    assert cfg.run.reps == 7
    assert cfg.generator.setting == "gauss-kernel"


# ============================================================
# Experiment files
# ============================================================


def test_json_file_is_merged_and_cli_wins(in_tmp):
    path = in_tmp / "exp.json"
    path.write_text(json.dumps({"schema_version": 1, "run": {"reps": 3, "seed": 11}}))

    cfg = load_hydra_config(["run.reps=5"], path)
    assert cfg.run.reps == 5
    assert cfg.run.seed == 11


def test_yaml_file(in_tmp):
    path = in_tmp / "exp.yaml"
    path.write_text("schema_version: 1\nselection:\n  splits: 9\n")
    assert load_hydra_config(config_file=path).selection.splits == 9


def test_malformed_json_reports_line_and_column(in_tmp):
    path = in_tmp / "bad.json"
    path.write_text('{\n  "run": {"reps": 3,}\n}')
    with pytest.raises(ConfigError, match="line 2"):
        load_config_file(path)


def test_malformed_yaml_reports_line(in_tmp):
    path = in_tmp / "bad.yaml"
    path.write_text("run:\n  reps: [1, 2\n")
    with pytest.raises(ConfigError, match="line"):
        load_config_file(path)


def test_unknown_top_level_key(in_tmp):
    path = in_tmp / "exp.json"
    path.write_text(json.dumps({"schema_version": 1, "plots": {}}))
    with pytest.raises(ConfigError, match="plots"):
        load_hydra_config(config_file=path)


def test_schema_version_must_match(in_tmp):
    path = in_tmp / "exp.json"
    path.write_text(json.dumps({"schema_version": 2}))
    with pytest.raises(ConfigError, match="schema_version"):
        load_hydra_config(config_file=path)


# ============================================================
# Hashing
# ============================================================


def test_config_hash_ignores_threads_and_logging(in_tmp):
    base = config_hash(load_hydra_config())

    assert config_hash(load_hydra_config(["run.threads=4"])) == base
    assert config_hash(load_hydra_config(["logging.level=DEBUG"])) == base
    assert config_hash(load_hydra_config(["run.reps=2"])) != base
    assert len(base) == 64


def test_missing_section():
    with pytest.raises(ConfigError):
        section({"run": None}, "run")


# ============================================================
# init
# ============================================================


def test_init_refuses_to_overwrite(tmp_path):
    conf = init_project_config(root=tmp_path)
    assert (conf / "config.yaml").exists()
    assert (conf / "logging" / "default.yaml").exists()

    with pytest.raises(ConfigError):
        init_project_config(root=tmp_path)
    init_project_config(force=True, root=tmp_path)
