# src/tensorloc/core/experiment.py
"""
Monte Carlo drivers behind the `simulate` and `rates` commands.

Both are pure functions of their configuration: replicate seeds are
spawned from the experiment seed, generator amplitudes are drawn once per
experiment and results are aggregated in replicate order.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from loguru import logger
from omegaconf import DictConfig

from tensorloc.core.errors import ConfigError, TensorLocError
from tensorloc.core.estimator import CovMatrix, localize, psd_project, sample_covariance
from tensorloc.core.hydra_loader import section
from tensorloc.core.lattice import LatticeSpec
from tensorloc.core.localfn import LocalizationFunction
from tensorloc.core.metrics import error_report, spectral_norm
from tensorloc.core.model import (
    DISTRIBUTIONS,
    DecaySpec,
    GeneratorSpec,
    make_rng,
    optimal_scaling,
    sample,
    sample_gaussian,
)
from tensorloc.core.pipeline import EstimatorSpec, fit, parse_estimators
from tensorloc.core.runner import run_replicates
from tensorloc.core.selection import SelectionConfig

REPLICATE_COLUMNS = [
    "replicate",
    "estimator",
    "n",
    "p",
    "d",
    "spectral",
    "frobenius",
    "l1",
    "selected_k",
]


def _in_section(key: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except TensorLocError as e:
        raise ConfigError(f"{key}: {e}") from None
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"{key}: invalid value ({e})") from None


def _positive_ints(values, key: str) -> tuple[int, ...]:
    values = tuple(int(v) for v in (values if isinstance(values, (list, tuple)) else [values]))
    if not values or any(v < 1 for v in values):
        raise ConfigError(f"{key}: expected positive integers, got {list(values)}")
    return values


# ============================================================
# Configuration objects
# ============================================================


def generator_from_config(data: dict) -> GeneratorSpec:
    missing = [key for key in ("setting", "dims") if data.get(key) is None]
    if missing:
        raise ConfigError(f"generator: missing {missing}")
    lattice = LatticeSpec(dims=tuple(data["dims"]), active=data.get("active"))
    return GeneratorSpec(
        setting=str(data["setting"]),
        lattice=lattice,
        a=data.get("a"),
        alpha=data.get("alpha"),
        length_scales=data.get("length_scales"),
    )


def selection_from_config(data: dict) -> SelectionConfig:
    cands = data.get("candidates")
    return SelectionConfig(
        candidates=None if cands is None else tuple(tuple(c) if isinstance(c, list) else (c,) for c in cands),
        splits=int(data.get("splits", 50)),
        seed=int(data.get("seed", 0)),
        norm=str(data.get("norm", "l1")),
        k_max=data.get("k_max"),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorSpec
    estimators: tuple[EstimatorSpec, ...]
    n_values: tuple[int, ...]
    distribution: str = "gaussian"
    dof: float | None = None
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    reps: int = 1
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(f"distribution.name: expected one of {DISTRIBUTIONS}, got '{self.distribution}'")
        if self.distribution == "t" and (self.dof is None or self.dof <= 2):
            raise ConfigError("distribution.dof: t data needs dof > 2")
        if self.reps < 1:
            raise ConfigError("run.reps: must be >= 1")

    @property
    def lattice(self) -> LatticeSpec:
        return self.generator.lattice

    @classmethod
    def from_config(cls, cfg: DictConfig) -> "ExperimentConfig":
        gen = _in_section("generator", generator_from_config, section(cfg, "generator"))
        dist = section(cfg, "distribution")
        run = section(cfg, "run")
        items = section(cfg, "estimators").get("items") or []
        return _in_section(
            "config",
            cls,
            generator=gen,
            estimators=tuple(_in_section("estimators.items", parse_estimators, items, gen.lattice)),
            n_values=_positive_ints(run.get("n", []), "run.n"),
            distribution=str(dist.get("name", "gaussian")),
            dof=None if dist.get("dof") is None else float(dist["dof"]),
            selection=_in_section("selection", selection_from_config, section(cfg, "selection")),
            reps=int(run.get("reps", 1)),
            seed=int(run.get("seed", 0)),
            threads=int(run.get("threads", 1)),
        )


# ============================================================
# simulate
# ============================================================


@dataclass
class SimulationContext:
    truth: CovMatrix
    config: ExperimentConfig


@dataclass
class SimulationResult:
    replicates: pd.DataFrame
    summary: pd.DataFrame
    generator: GeneratorSpec


def _simulation_replicate(ctx: SimulationContext, index: int, seed_seq: np.random.SeedSequence) -> list[dict]:
    exp = ctx.config
    n = exp.n_values[index // exp.reps]
    rep = index % exp.reps
    data_ss, select_ss = seed_seq.spawn(2)

    data = sample(ctx.truth, n, data_ss, exp.distribution, exp.dof or 10.0)
    selection = SelectionConfig(
        candidates=exp.selection.candidates,
        splits=exp.selection.splits,
        seed=int(select_ss.generate_state(1)[0]),
        norm=exp.selection.norm,
        k_max=exp.selection.k_max,
    )

    rows = []
    for est in exp.estimators:
        fitted = fit(est, data, exp.lattice, truth=ctx.truth, selection=selection)
        report = error_report(fitted.estimate, ctx.truth)
        rows.append(
            {
                "replicate": rep,
                "estimator": est.name,
                "n": n,
                "p": exp.lattice.n_sites,
                "d": exp.lattice.d,
                "spectral": report.spectral,
                "frobenius": report.frobenius,
                "l1": report.l1_operator,
                "selected_k": fitted.selected_label,
            }
        )
    return rows


def summarize_simulation(replicates: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard deviation per (estimator, n), plus mean selected k components."""
    grouped = replicates.groupby(["estimator", "n"], sort=False)
    summary = grouped[["spectral", "frobenius", "l1"]].agg(["mean", "std"])
    summary.columns = [f"{metric}_{stat}" for metric, stat in summary.columns]
    summary = summary.reset_index()

    labels = replicates["selected_k"].fillna("").astype(str)
    if labels.str.len().gt(0).any():
        parts = labels.str.split("x", expand=True).replace("", np.nan).apply(pd.to_numeric)
        parts.columns = [f"k{i + 1}_mean" for i in range(parts.shape[1])]
        parts[["estimator", "n"]] = replicates[["estimator", "n"]]
        means = parts.groupby(["estimator", "n"], sort=False).mean().reset_index()
        summary = summary.merge(means, on=["estimator", "n"], how="left")
    return summary


def experiment_truth(
    generator: GeneratorSpec, seed: int
) -> tuple[GeneratorSpec, CovMatrix, np.random.SeedSequence]:
    """Freeze amplitudes from the experiment seed; returns (generator, truth, replicate root)."""
    amp_ss, rep_root = np.random.SeedSequence(seed).spawn(2)
    generator = generator.with_amplitudes(make_rng(amp_ss))
    return generator, generator.build(), rep_root


def run_simulation(
    exp: ExperimentConfig,
    progress: bool = False,
    log_level: str = "WARNING",
) -> SimulationResult:
    generator, truth, rep_root = experiment_truth(exp.generator, exp.seed)

    logger.info(
        "simulate: {} truth on {}, n={}, {} reps, estimators={}",
        generator.setting,
        exp.lattice.dims,
        list(exp.n_values),
        exp.reps,
        [e.name for e in exp.estimators],
    )

    seeds = rep_root.spawn(len(exp.n_values) * exp.reps)
    per_rep = run_replicates(
        _simulation_replicate,
        SimulationContext(truth=truth, config=exp),
        seeds,
        threads=exp.threads,
        desc="simulate",
        progress=progress,
        log_level=log_level,
    )

    replicates = pd.DataFrame([row for rows in per_rep for row in rows], columns=REPLICATE_COLUMNS)
    return SimulationResult(
        replicates=replicates,
        summary=summarize_simulation(replicates),
        generator=generator,
    )


# ============================================================
# rates
# ============================================================


@dataclass(frozen=True)
class RatesConfig:
    family: str
    param: float
    p: int
    n_values: tuple[int, ...]
    reps: int
    h: LocalizationFunction
    c: float = 0.25
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.p < 2:
            raise ConfigError("rates.p: must be >= 2")
        if self.reps < 1:
            raise ConfigError("rates.reps: must be >= 1")
        if len(self.n_values) < 2:
            raise ConfigError("rates.n: at least two sample sizes are needed for a slope")
        if self.h.arity != 1:
            raise ConfigError("rates.h: the rate study runs on a 1-order lattice")
        DecaySpec(self.family, (self.param,), (self.p,))

    @property
    def decay(self) -> DecaySpec:
        return DecaySpec(self.family, (self.param,), (self.p,))

    @property
    def target_slope(self) -> float:
        if self.family == "polynomial":
            return -2.0 * self.param / (2.0 * self.param + 1.0)
        return -1.0

    @classmethod
    def from_config(cls, cfg: DictConfig, threads: int | None = None) -> "RatesConfig":
        data = section(cfg, "rates")
        run = section(cfg, "run")
        h = _in_section("rates.h", LocalizationFunction.from_dict, dict(data.get("h") or {"kind": "tapering"}), arity=1)
        return _in_section(
            "rates",
            cls,
            family=str(data.get("family", "polynomial")),
            param=float(data.get("param", 1.0)),
            p=int(data.get("p", 100)),
            n_values=_positive_ints(data.get("n", []), "rates.n"),
            reps=int(data.get("reps", 1)),
            h=h,
            c=float(data.get("c", 0.25)),
            seed=int(data.get("seed", 0)),
            threads=int(threads if threads is not None else run.get("threads", 1)),
        )


def rates_truth(family: str, param: float, p: int, c: float = 0.25) -> CovMatrix:
    """
    1-order truths matching the decay families.

    polynomial : 1 on the diagonal, c |i - j|^(-alpha - 1) off it (PSD-projected)
    exponential: beta^-|i - j| (AR(1) with coefficient 1/beta)
    """
    lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p))).astype(float)
    if family == "polynomial":
        off = c * np.maximum(lag, 1.0) ** (-param - 1.0)
        return psd_project(np.where(lag == 0, 1.0, off))
    if family == "exponential":
        return (1.0 / param) ** lag
    raise ConfigError(f"rates.family: unknown decay family '{family}'")


@dataclass
class RatesContext:
    truth: CovMatrix
    config: RatesConfig
    k_star: dict[int, tuple[int, ...]]


def _rates_replicate(ctx: RatesContext, index: int, seed_seq: np.random.SeedSequence) -> tuple[int, float]:
    cfg = ctx.config
    n = cfg.n_values[index // cfg.reps]
    data = sample_gaussian(ctx.truth, n, seed_seq)
    spec = LatticeSpec(dims=(cfg.p,))
    est = localize(sample_covariance(data), spec, cfg.h, ctx.k_star[n])
    return n, spectral_norm(est - ctx.truth) ** 2


def fit_slope(n_values: Sequence[int], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(n)."""
    slope, _ = np.polyfit(np.log(np.asarray(n_values, float)), np.log(np.asarray(errors, float)), 1)
    return float(slope)


def run_rates(cfg: RatesConfig, progress: bool = False, log_level: str = "WARNING") -> pd.DataFrame:
    truth = rates_truth(cfg.family, cfg.param, cfg.p, cfg.c)
    k_star = {n: optimal_scaling(cfg.decay, n).k for n in cfg.n_values}
    logger.info("rates: {} decay (param={}), p={}, k*={}", cfg.family, cfg.param, cfg.p, k_star)

    seeds = np.random.SeedSequence(cfg.seed).spawn(len(cfg.n_values) * cfg.reps)
    results = run_replicates(
        _rates_replicate,
        RatesContext(truth=truth, config=cfg, k_star=k_star),
        seeds,
        threads=cfg.threads,
        desc="rates",
        progress=progress,
        log_level=log_level,
    )

    frame = pd.DataFrame(results, columns=["n", "sq_error"])
    table = frame.groupby("n", sort=False)["sq_error"].agg(["mean", "std"]).reset_index()
    table.columns = ["n", "mean_sq_error", "std_sq_error"]
    table.insert(1, "k_star", [k_star[n][0] for n in table["n"]])
    table["mean_error"] = frame.assign(err=np.sqrt(frame["sq_error"])).groupby("n", sort=False)["err"].mean().to_numpy()
    table["scaled_error"] = table["n"] * table["mean_sq_error"] / np.log(table["n"].astype(float))
    table["fitted_slope"] = fit_slope(table["n"], table["mean_sq_error"])
    table["target_slope"] = cfg.target_slope

    logger.info(
        "rates: fitted slope {:.3f} (target {:.3f})",
        table["fitted_slope"].iloc[0],
        cfg.target_slope,
    )
    return table
