"""Experiment pipeline: config parsing, multi-realization fan-out, aggregation
and CSV emission, plus oracle cross-checks of finished runs.

A config is one JSON document with nested sections.  Realization r always
uses seed base_seed + r; realizations are mutually independent and may run on
a thread pool, and every output is a pure function of (config, seeds), so
reruns are byte-identical regardless of parallelism.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import QoSTargets, check_tow_condition, sample_targets
from .learner import (
    ALGORITHMS,
    NOISE_KINDS,
    EventLog,
    NoiseModel,
    StepsizeSchedule,
    Trace,
    run_simulation,
)
from .oracle import EquilibriumReport, check_feasibility, minimal_equilibrium, power_control_equilibrium_linear
from .scenarios import (
    PowerControlInstance,
    gen_power_control,
    gen_sensor_network,
    gen_task_allocation,
    instance_from_config,
    instance_to_config,
)

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "ExperimentConfig",
    "AggregateStats",
    "MetricStats",
    "RealizationSummary",
    "ExperimentResult",
    "CrossCheckReport",
    "parse_config",
    "serialize_config",
    "run_experiment",
    "aggregate_traces",
    "emit_csv",
    "cross_check",
    "run_tow_validation",
]

SCENARIO_KINDS = ("power_control", "task_allocation", "sensor_network")
FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    """Invalid experiment config; the message names the offending field."""


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _check_keys(mapping: dict, allowed: set, path: str):
    for key in mapping:
        if key not in allowed:
            _fail(f"{path}.{key}", "unknown field")


def _get(mapping, key, kind, path, default=None, required=False):
    if key not in mapping or mapping[key] is None:
        if required:
            _fail(f"{path}.{key}", "required field is missing")
        return default
    value = mapping[key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return int(value)
    if kind is bool and isinstance(value, bool):
        return value
    if kind is str and isinstance(value, str):
        return value
    if kind is dict and isinstance(value, dict):
        return value
    if kind is list and isinstance(value, list):
        return value
    _fail(f"{path}.{key}", f"expected {kind.__name__}, got {type(value).__name__}")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    n_players: int
    n_games: int
    bound: float
    noise_floor: float | None = None
    edge_prob: float | None = None
    packets_per_round: int | None = None
    value_scale: float | None = None
    offset: float | None = None
    energy_weight: float | None = None
    require_feasible: bool = False
    max_resamples: int = 1_000_000
    instance: dict | None = None

    def sample(self, rng: np.random.Generator):
        if self.instance is not None:
            return instance_from_config(self.instance)
        if self.kind == "power_control":
            return gen_power_control(
                self.n_players, rng, n_games=self.n_games,
                noise_floor=self.noise_floor, bound=self.bound,
            )
        if self.kind == "task_allocation":
            return gen_task_allocation(self.n_players, self.n_games, rng, bound=self.bound)
        return gen_sensor_network(
            self.n_players, self.edge_prob, rng,
            packets_per_round=self.packets_per_round,
            value_scale=self.value_scale, offset=self.offset,
            energy_weight=self.energy_weight,
        )


@dataclass(frozen=True)
class CheckThresholds:
    action_tol: float = 0.01
    reward_tol: float = 0.05
    quiet_fraction: float = 0.5
    min_pass_fraction: float = 0.95


@dataclass(frozen=True)
class ValidateSettings:
    points: int = 100
    step: float = 1e-4
    tolerance: float = 1e-6
    box: tuple = (0.05, 0.95)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    algorithm: str
    schedule: StepsizeSchedule
    noise: NoiseModel
    lam: tuple
    delta: float
    rho: float
    phi: float
    horizon: int
    realizations: int
    base_seed: int
    record_stride: int
    output_dir: str = "."
    write_traces: bool = False
    metrics: tuple = ("min_reward",)
    check: CheckThresholds = CheckThresholds()
    validate: ValidateSettings = ValidateSettings()
    oracle_assignment: tuple | None = None

    def targets(self) -> QoSTargets:
        return QoSTargets(np.asarray(self.lam), self.delta)


def _parse_scenario(section: dict) -> ScenarioConfig:
    path = "scenario"
    if not isinstance(section, dict):
        _fail(path, "must be an object")
    kind = _get(section, "kind", str, path, required=True)
    if kind not in SCENARIO_KINDS:
        _fail(f"{path}.kind", f"must be one of {SCENARIO_KINDS}")
    common = {"kind", "require_feasible", "max_resamples", "instance"}
    per_kind = {
        "power_control": {"n_players", "n_games", "noise_floor", "bound"},
        "task_allocation": {"n_players", "n_games", "bound"},
        "sensor_network": {
            "n_players", "edge_prob", "packets_per_round",
            "value_scale", "offset", "energy_weight",
        },
    }[kind]
    _check_keys(section, common | per_kind, path)
    require_feasible = _get(section, "require_feasible", bool, path, default=False)
    max_resamples = _get(section, "max_resamples", int, path, default=1_000_000)
    if max_resamples < 1:
        _fail(f"{path}.max_resamples", "must be at least 1")
    instance = _get(section, "instance", dict, path)

    if instance is not None:
        for key in per_kind:
            if key in section:
                _fail(f"{path}.{key}", "not allowed together with a pinned instance")
        if instance.get("kind") != kind:
            _fail(f"{path}.instance.kind", f"does not match scenario kind {kind!r}")
        try:
            built = instance_from_config(instance)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path}.instance: {exc}") from exc
        if require_feasible:
            _fail(f"{path}.require_feasible", "needs a sampled scenario, not a pinned instance")
        return ScenarioConfig(
            kind=kind, n_players=built.n_players, n_games=built.n_games,
            bound=float(built.bounds.upper.max()), require_feasible=False,
            max_resamples=max_resamples, instance=instance,
        )

    n_players = _get(section, "n_players", int, path, required=True)
    if n_players < 1:
        _fail(f"{path}.n_players", "must be at least 1")
    if kind == "power_control":
        n_games = _get(section, "n_games", int, path, default=1)
        cfg = ScenarioConfig(
            kind=kind, n_players=n_players, n_games=n_games,
            bound=_get(section, "bound", float, path, default=1.0),
            noise_floor=_get(section, "noise_floor", float, path, default=0.1),
            require_feasible=require_feasible, max_resamples=max_resamples,
        )
    elif kind == "task_allocation":
        n_games = _get(section, "n_games", int, path, default=1)
        cfg = ScenarioConfig(
            kind=kind, n_players=n_players, n_games=n_games,
            bound=_get(section, "bound", float, path, default=10.0),
            require_feasible=require_feasible, max_resamples=max_resamples,
        )
    else:
        cfg = ScenarioConfig(
            kind=kind, n_players=n_players, n_games=1, bound=1.0,
            edge_prob=_get(section, "edge_prob", float, path, default=0.2),
            packets_per_round=_get(section, "packets_per_round", int, path, default=100),
            value_scale=_get(section, "value_scale", float, path, default=0.8),
            offset=_get(section, "offset", float, path, default=0.8),
            energy_weight=_get(section, "energy_weight", float, path, default=2.0),
            require_feasible=require_feasible, max_resamples=max_resamples,
        )
    if cfg.n_games < 1:
        _fail(f"{path}.n_games", "must be at least 1")
    if cfg.require_feasible and cfg.n_games != 1:
        _fail(f"{path}.require_feasible", "only supported for single-game scenarios")
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config, resolving all defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(raw, {
        "scenario", "algorithm", "schedule", "noise", "targets", "switching",
        "horizon", "realizations", "base_seed", "record_stride", "output",
        "check", "validate", "oracle_assignment",
    }, "config")
    if "scenario" not in raw:
        _fail("config.scenario", "required section is missing")
    scenario = _parse_scenario(raw["scenario"])

    algorithm = _get(raw, "algorithm", str, "config", default="ToP")
    if algorithm not in ALGORITHMS:
        _fail("config.algorithm", f"must be one of {ALGORITHMS}")
    if algorithm == "MetaToP" and scenario.n_games < 2:
        _fail("config.algorithm", "MetaToP needs scenario.n_games >= 2")
    if algorithm in ("ToP", "FDToP") and scenario.n_games != 1:
        _fail("config.algorithm", f"{algorithm} needs scenario.n_games == 1")

    sched_raw = _get(raw, "schedule", dict, "config", default={})
    _check_keys(sched_raw, {"scale", "offset", "exponent"}, "schedule")
    try:
        schedule = StepsizeSchedule(
            scale=_get(sched_raw, "scale", float, "schedule", default=1.0),
            offset=_get(sched_raw, "offset", float, "schedule", default=100.0),
            exponent=_get(sched_raw, "exponent", float, "schedule", default=1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from exc

    noise_raw = _get(raw, "noise", dict, "config", default={})
    _check_keys(noise_raw, {"kind", "sigma", "clip"}, "noise")
    default_kind = "binomial-feedback" if scenario.kind == "sensor_network" else "gaussian"
    kind = _get(noise_raw, "kind", str, "noise", default=default_kind)
    if kind not in NOISE_KINDS:
        _fail("noise.kind", f"must be one of {NOISE_KINDS}")
    if kind == "binomial-feedback" and scenario.kind != "sensor_network":
        _fail("noise.kind", "binomial-feedback is only defined for sensor_network")
    try:
        noise = NoiseModel(
            kind=kind,
            sigma=_get(noise_raw, "sigma", float, "noise", default=0.1),
            clip=_get(noise_raw, "clip", float, "noise", default=float("inf")),
        )
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from exc

    targets_raw = _get(raw, "targets", dict, "config", default={})
    _check_keys(targets_raw, {"lambda", "delta"}, "targets")
    lam_raw = targets_raw.get("lambda", 0.1)
    if isinstance(lam_raw, (int, float)) and not isinstance(lam_raw, bool):
        lam = (float(lam_raw),) * scenario.n_players
    elif isinstance(lam_raw, list):
        lam = tuple(float(v) for v in lam_raw)
    else:
        _fail("targets.lambda", "must be a number or a list of numbers")
    if len(lam) != scenario.n_players:
        _fail("targets.lambda", f"needs {scenario.n_players} entries, got {len(lam)}")
    delta = _get(targets_raw, "delta", float, "targets", default=0.01)
    try:
        QoSTargets(np.asarray(lam), delta)
    except ValueError as exc:
        raise ConfigError(f"targets: {exc}") from exc

    switch_raw = _get(raw, "switching", dict, "config", default={})
    _check_keys(switch_raw, {"rho", "phi"}, "switching")
    rho = _get(switch_raw, "rho", float, "switching", default=0.2)
    phi = _get(switch_raw, "phi", float, "switching", default=0.1)
    if not (0 < phi <= rho < 1):
        _fail("switching", "must satisfy 0 < phi <= rho < 1")

    horizon = _get(raw, "horizon", int, "config", default=100_000)
    if horizon < 1:
        _fail("config.horizon", "must be at least 1")
    realizations = _get(raw, "realizations", int, "config", default=100)
    if realizations < 1:
        _fail("config.realizations", "must be at least 1")
    base_seed = _get(raw, "base_seed", int, "config", default=0)
    record_stride = _get(raw, "record_stride", int, "config", default=1)
    if record_stride < 1:
        _fail("config.record_stride", "must be at least 1")

    output_raw = _get(raw, "output", dict, "config", default={})
    _check_keys(output_raw, {"dir", "write_traces", "metrics"}, "output")
    metrics = tuple(_get(output_raw, "metrics", list, "output", default=["min_reward"]))
    for name in metrics:
        if name in ("min_reward", "total_action"):
            continue
        if name.startswith("reward_"):
            try:
                idx = int(name.removeprefix("reward_"))
            except ValueError:
                idx = -1
            if 0 <= idx < scenario.n_players:
                continue
        _fail("output.metrics", f"unknown metric {name!r}")

    check_raw = _get(raw, "check", dict, "config", default={})
    _check_keys(check_raw, {"action_tol", "reward_tol", "quiet_fraction", "min_pass_fraction"}, "check")
    check = CheckThresholds(
        action_tol=_get(check_raw, "action_tol", float, "check", default=0.01),
        reward_tol=_get(check_raw, "reward_tol", float, "check", default=0.05),
        quiet_fraction=_get(check_raw, "quiet_fraction", float, "check", default=0.5),
        min_pass_fraction=_get(check_raw, "min_pass_fraction", float, "check", default=0.95),
    )

    validate_raw = _get(raw, "validate", dict, "config", default={})
    _check_keys(validate_raw, {"points", "step", "tolerance", "box"}, "validate")
    box_raw = _get(validate_raw, "box", list, "validate", default=[0.05, 0.95])
    if len(box_raw) != 2 or not 0 < box_raw[0] < box_raw[1] < 1:
        _fail("validate.box", "must be [lo, hi] fractions with 0 < lo < hi < 1")
    validate = ValidateSettings(
        points=_get(validate_raw, "points", int, "validate", default=100),
        step=_get(validate_raw, "step", float, "validate", default=1e-4),
        tolerance=_get(validate_raw, "tolerance", float, "validate", default=1e-6),
        box=(float(box_raw[0]), float(box_raw[1])),
    )

    assignment_raw = raw.get("oracle_assignment")
    oracle_assignment = None
    if assignment_raw is not None:
        if not isinstance(assignment_raw, list) or len(assignment_raw) != scenario.n_players:
            _fail("config.oracle_assignment", f"needs {scenario.n_players} game labels")
        oracle_assignment = tuple(int(v) for v in assignment_raw)
        if any(g < 1 or g > scenario.n_games for g in oracle_assignment):
            _fail("config.oracle_assignment", f"labels must lie in 1..{scenario.n_games}")

    if noise.kind == "binomial-feedback" and scenario.kind != "sensor_network":
        _fail("noise.kind", "binomial-feedback needs the sensor scenario")

    return ExperimentConfig(
        scenario=scenario, algorithm=algorithm, schedule=schedule, noise=noise,
        lam=lam, delta=delta, rho=rho, phi=phi, horizon=horizon,
        realizations=realizations, base_seed=base_seed, record_stride=record_stride,
        output_dir=_get(output_raw, "dir", str, "output", default="."),
        write_traces=_get(output_raw, "write_traces", bool, "output", default=False),
        metrics=metrics, check=check, validate=validate,
        oracle_assignment=oracle_assignment,
    )


def serialize_config(config: ExperimentConfig) -> str:
    """Inverse of parse_config: parse(serialize(cfg)) == cfg."""
    scenario = {"kind": config.scenario.kind,
                "require_feasible": config.scenario.require_feasible,
                "max_resamples": config.scenario.max_resamples}
    if config.scenario.instance is not None:
        scenario["instance"] = config.scenario.instance
        scenario["require_feasible"] = False
    else:
        scenario["n_players"] = config.scenario.n_players
        if config.scenario.kind == "power_control":
            scenario["n_games"] = config.scenario.n_games
            scenario["noise_floor"] = config.scenario.noise_floor
            scenario["bound"] = config.scenario.bound
        elif config.scenario.kind == "task_allocation":
            scenario["n_games"] = config.scenario.n_games
            scenario["bound"] = config.scenario.bound
        else:
            scenario["edge_prob"] = config.scenario.edge_prob
            scenario["packets_per_round"] = config.scenario.packets_per_round
            scenario["value_scale"] = config.scenario.value_scale
            scenario["offset"] = config.scenario.offset
            scenario["energy_weight"] = config.scenario.energy_weight
    payload = {
        "scenario": scenario,
        "algorithm": config.algorithm,
        "schedule": {
            "scale": config.schedule.scale,
            "offset": config.schedule.offset,
            "exponent": config.schedule.exponent,
        },
        "noise": {
            "kind": config.noise.kind,
            "sigma": config.noise.sigma,
            "clip": None if config.noise.clip == float("inf") else config.noise.clip,
        },
        "targets": {"lambda": list(config.lam), "delta": config.delta},
        "switching": {"rho": config.rho, "phi": config.phi},
        "horizon": config.horizon,
        "realizations": config.realizations,
        "base_seed": config.base_seed,
        "record_stride": config.record_stride,
        "output": {
            "dir": config.output_dir,
            "write_traces": config.write_traces,
            "metrics": list(config.metrics),
        },
        "check": {
            "action_tol": config.check.action_tol,
            "reward_tol": config.check.reward_tol,
            "quiet_fraction": config.check.quiet_fraction,
            "min_pass_fraction": config.check.min_pass_fraction,
        },
        "validate": {
            "points": config.validate.points,
            "step": config.validate.step,
            "tolerance": config.validate.tolerance,
            "box": list(config.validate.box),
        },
        "oracle_assignment": (
            list(config.oracle_assignment) if config.oracle_assignment else None
        ),
    }
    return json.dumps(payload, indent=2, sort_keys=True)


@dataclass(eq=False)
class RealizationSummary:
    """Everything cross-checks need about one realization, replayable."""

    run_id: int
    seed: int
    fingerprint: str
    instance: dict
    resampled_instances: int
    lambda_bar: np.ndarray
    final_actions: np.ndarray
    final_games: np.ndarray
    tail_actions: np.ndarray
    tail_rewards: np.ndarray
    tail_rewards_observed: np.ndarray
    tail_min_reward: float
    events: EventLog

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "seed": self.seed,
            "fingerprint": self.fingerprint,
            "resampled_instances": self.resampled_instances,
            "lambda_bar": self.lambda_bar.tolist(),
            "final_actions": self.final_actions.tolist(),
            "final_games": self.final_games.tolist(),
            "tail_actions": self.tail_actions.tolist(),
            "tail_rewards": self.tail_rewards.tolist(),
            "tail_rewards_observed": self.tail_rewards_observed.tolist(),
            "tail_min_reward": self.tail_min_reward,
            "events": {
                "resets": self.events.resets,
                "switches": self.events.switches,
                "last_reset": self.events.last_reset,
                "last_switch": self.events.last_switch,
            },
            "instance": self.instance,
        }


@dataclass(eq=False)
class MetricStats:
    median: np.ndarray
    q1: np.ndarray
    q3: np.ndarray
    mean: np.ndarray


@dataclass(eq=False)
class AggregateStats:
    """Per recorded round: median, quartiles and mean of each metric across
    realizations (linear-interpolation quantiles)."""

    rounds: np.ndarray
    metrics: dict


@dataclass(eq=False)
class ExperimentResult:
    config: ExperimentConfig
    traces: list
    summaries: list
    stats: AggregateStats


def _metric_series(trace: Trace, name: str) -> np.ndarray:
    if name == "min_reward":
        return trace.reward_true.min(axis=1)
    if name == "total_action":
        return trace.actions.sum(axis=1)
    if name.startswith("reward_"):
        return trace.reward_true[:, int(name.removeprefix("reward_"))]
    raise ValueError(f"unknown metric {name!r}")


def aggregate_traces(traces: list, metrics=("min_reward",)) -> AggregateStats:
    """Cross-realization median / quartiles / mean per recorded round."""
    if not traces:
        return AggregateStats(np.empty(0, dtype=np.int64), {name: MetricStats(*(np.empty(0),) * 4) for name in metrics})
    rounds = traces[0].rounds
    for trace in traces[1:]:
        if not np.array_equal(trace.rounds, rounds):
            raise ValueError("traces disagree on recorded rounds")
    stats = {}
    for name in metrics:
        matrix = np.vstack([_metric_series(trace, name) for trace in traces])
        q1, median, q3 = np.quantile(matrix, [0.25, 0.5, 0.75], axis=0)
        stats[name] = MetricStats(median=median, q1=q1, q3=q3, mean=matrix.mean(axis=0))
    return AggregateStats(rounds=rounds, metrics=stats)


def _run_one(config: ExperimentConfig, run_id: int):
    seed = config.base_seed + run_id
    streams = np.random.SeedSequence(seed).spawn(4)
    instance_rng = np.random.default_rng(streams[0])
    targets = config.targets()
    resampled = 0
    if config.scenario.instance is not None:
        field_obj = config.scenario.sample(instance_rng)
    elif config.scenario.require_feasible:
        lam_bar = sample_targets(targets, np.random.default_rng(streams[1])).lam_bar
        assignment = np.ones(config.scenario.n_players, dtype=np.int64)
        while True:
            field_obj = config.scenario.sample(instance_rng)
            if check_feasibility(field_obj, assignment, lam_bar).feasible:
                break
            resampled += 1
            if resampled > config.scenario.max_resamples:
                raise RuntimeError(
                    f"realization {run_id}: no feasible instance within "
                    f"{config.scenario.max_resamples} resamples"
                )
    else:
        field_obj = config.scenario.sample(instance_rng)

    trace = run_simulation(
        config.algorithm, field_obj, targets, config.schedule, config.noise,
        config.horizon, seed, rho=config.rho, phi=config.phi,
        record_stride=config.record_stride,
    )
    summary = RealizationSummary(
        run_id=run_id,
        seed=seed,
        fingerprint=trace.fingerprint,
        instance=instance_to_config(field_obj),
        resampled_instances=resampled,
        lambda_bar=trace.lambda_bar,
        final_actions=trace.final_actions,
        final_games=trace.final_games,
        tail_actions=trace.tail.actions_mean,
        tail_rewards=trace.tail.reward_true_mean,
        tail_rewards_observed=trace.tail.reward_observed_mean,
        tail_min_reward=trace.tail.min_reward_mean,
        events=trace.events,
    )
    return trace, summary


def _warm_kernel():
    # First call compiles the numba kernel; doing it once up front keeps the
    # thread pool from stacking up behind the compilation lock.
    instance = PowerControlInstance(gains=np.array([[1.0]]), noise_floor=0.1)
    run_simulation(
        "ToP", instance, QoSTargets(np.array([0.1]), 0.01),
        StepsizeSchedule(), NoiseModel("none"), 1, seed=0,
    )


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Run all realizations and aggregate.  Execution order never changes any
    output byte; `threads` only trades wall-clock time."""
    runs = range(config.realizations)
    if threads > 1:
        _warm_kernel()
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda r: _run_one(config, r), runs))
    else:
        outcomes = [_run_one(config, r) for r in runs]
    traces = [trace for trace, _ in outcomes]
    summaries = [summary for _, summary in outcomes]
    stats = aggregate_traces(traces, config.metrics)
    return ExperimentResult(config=config, traces=traces, summaries=summaries, stats=stats)


def _format(value: float) -> str:
    return FLOAT_FMT % value


def emit_csv(data, path):
    """Write traces (list of Trace) or AggregateStats to a CSV file.

    Trace schema:     run_id,t,player,game,action,reward_true,reward_observed,reset,switch
    Aggregate schema: t,metric,median,q1,q3,mean
    Reals carry 17 significant digits; identical inputs give identical bytes.
    """
    with open(path, "w", newline="") as handle:
        if isinstance(data, AggregateStats):
            handle.write("t,metric,median,q1,q3,mean\n")
            for i, t in enumerate(data.rounds):
                for name, stat in data.metrics.items():
                    handle.write(
                        f"{t},{name},{_format(stat.median[i])},{_format(stat.q1[i])},"
                        f"{_format(stat.q3[i])},{_format(stat.mean[i])}\n"
                    )
        else:
            handle.write("run_id,t,player,game,action,reward_true,reward_observed,reset,switch\n")
            for run_id, trace in enumerate(data):
                for i, t in enumerate(trace.rounds):
                    reset = int(trace.reset[i])
                    rows = [
                        f"{run_id},{t},{p},{trace.games[i, p]},"
                        f"{_format(trace.actions[i, p])},{_format(trace.reward_true[i, p])},"
                        f"{_format(trace.reward_observed[i, p])},{reset},{int(trace.switch[i, p])}"
                        for p in range(trace.n_players)
                    ]
                    handle.write("\n".join(rows) + "\n")


@dataclass(eq=False)
class RealizationCheck:
    run_id: int
    oracle_status: str
    action_err: float
    reward_err: float
    boundary_pinned: bool
    ok_action: bool | None
    ok_reward: bool
    quiet_resets: bool
    quiet_switches: bool
    events: EventLog

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "oracle_status": self.oracle_status,
            "action_err": self.action_err,
            "reward_err": self.reward_err,
            "boundary_pinned": self.boundary_pinned,
            "ok_action": self.ok_action,
            "ok_reward": self.ok_reward,
            "quiet_resets": self.quiet_resets,
            "quiet_switches": self.quiet_switches,
            "resets": self.events.resets,
            "switches": self.events.switches,
            "last_reset": self.events.last_reset,
            "last_switch": self.events.last_switch,
        }


@dataclass(eq=False)
class CrossCheckReport:
    """Comparison of tail-averaged runs against the equilibrium oracle.

    Realizations whose oracle is inconclusive are reported but excluded from
    the action/reward pass fractions (they are not counted as failures).
    """

    overall_pass: bool
    fractions: dict
    thresholds: CheckThresholds
    realizations: list

    def to_dict(self) -> dict:
        return {
            "overall_pass": self.overall_pass,
            "fractions": self.fractions,
            "thresholds": {
                "action_tol": self.thresholds.action_tol,
                "reward_tol": self.thresholds.reward_tol,
                "quiet_fraction": self.thresholds.quiet_fraction,
                "min_pass_fraction": self.thresholds.min_pass_fraction,
            },
            "realizations": [check.to_dict() for check in self.realizations],
        }


def _oracle_report(field_obj, assignment, lam_bar) -> EquilibriumReport:
    if type(field_obj) is PowerControlInstance:
        return power_control_equilibrium_linear(field_obj, assignment, lam_bar)
    return minimal_equilibrium(field_obj, assignment, lam_bar)


def cross_check(config: ExperimentConfig, result: ExperimentResult | None = None,
                threads: int = 1) -> CrossCheckReport:
    """Compare each realization's tail averages against the oracle equilibrium
    for its (final) assignment, and count reset/switch events."""
    if result is None:
        result = run_experiment(config, threads=threads)
    quiet_round = int(config.horizon * config.check.quiet_fraction)
    checks = []
    for summary in result.summaries:
        field_obj = instance_from_config(summary.instance)
        report = _oracle_report(field_obj, summary.final_games, summary.lambda_bar)
        usable = report.status == "converged" and report.interior
        action_err = (
            float(np.max(np.abs(summary.tail_actions - report.equilibrium)))
            if usable else float("nan")
        )
        reward_err = float(np.max(np.abs(summary.tail_rewards - summary.lambda_bar)))
        upper = field_obj.bounds.upper
        pinned = bool(np.any(summary.tail_actions >= (1 - 1e-3) * upper))
        checks.append(RealizationCheck(
            run_id=summary.run_id,
            oracle_status="converged" if usable else report.status,
            action_err=action_err,
            reward_err=reward_err,
            boundary_pinned=pinned,
            ok_action=(action_err <= config.check.action_tol) if usable else None,
            ok_reward=reward_err <= config.check.reward_tol,
            quiet_resets=summary.events.last_reset < quiet_round,
            quiet_switches=summary.events.last_switch < quiet_round,
            events=summary.events,
        ))

    conclusive = [c for c in checks if c.ok_action is not None]
    fractions = {
        "action": (
            sum(c.ok_action for c in conclusive) / len(conclusive) if conclusive else None
        ),
        "reward": sum(c.ok_reward for c in checks) / len(checks),
        "quiet_resets": sum(c.quiet_resets for c in checks) / len(checks),
        "quiet_switches": sum(c.quiet_switches for c in checks) / len(checks),
        "conclusive": len(conclusive) / len(checks),
    }
    need = config.check.min_pass_fraction
    overall = fractions["reward"] >= need
    if fractions["action"] is not None:
        overall = overall and fractions["action"] >= need
    overall = overall and fractions["quiet_resets"] >= need
    if config.algorithm == "MetaToP":
        overall = overall and fractions["quiet_switches"] >= need
    return CrossCheckReport(
        overall_pass=bool(overall), fractions=fractions,
        thresholds=config.check, realizations=checks,
    )


def run_tow_validation(config: ExperimentConfig):
    """Sweep the tug-of-war condition over random interior points of one
    instance of the configured scenario."""
    streams = np.random.SeedSequence(config.base_seed).spawn(4)
    field_obj = config.scenario.sample(np.random.default_rng(streams[0]))
    point_rng = np.random.default_rng(streams[1])
    settings = config.validate
    upper = field_obj.bounds.upper
    lo, hi = settings.box[0] * upper, settings.box[1] * upper
    if np.any(lo < settings.step) or np.any(hi > upper - settings.step):
        raise ConfigError("validate.box leaves no room for the finite-difference step")
    points = [point_rng.uniform(lo, hi) for _ in range(settings.points)]
    assignment = (np.arange(field_obj.n_players) % field_obj.n_games) + 1
    report = check_tow_condition(
        field_obj, assignment, points, step=settings.step, tolerance=settings.tolerance,
    )
    return report, field_obj, assignment
