"""The three concrete reward families and their seeded instance generators.

* Power control: players are transmitter/receiver pairs sharing channels;
  the reward is the SINR c_nn x_n / (N0 + sum of same-channel cross gains).
* Task allocation: agents split a logarithmic task utility in proportion to
  their weighted effort share.
* Sensor activation: sensors are off with probability x_n; the reward trades
  the value of exactly-computed delivery probability against energy savings.

Instances are frozen dataclasses, serialize to plain dicts so a sampled
instance can be pinned inside an experiment config, and evaluate with pure
numpy (no internal randomness).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import Bounds, RewardField, action_profile, game_assignment

__all__ = [
    "PowerControlInstance",
    "TaskAllocationInstance",
    "SensorNetworkInstance",
    "power_control_reward",
    "task_allocation_reward",
    "sensor_delivery_probability_exact",
    "sensor_reward",
    "sensor_feedback_sample",
    "gen_power_control",
    "gen_task_allocation",
    "gen_sensor_network",
    "instance_to_config",
    "instance_from_config",
    "instance_fingerprint",
]

MAX_ENUMERATION_SENSORS = 20


@dataclass(frozen=True, eq=False)
class PowerControlInstance(RewardField):
    """Channel gain matrix and receiver noise floor.

    gains[m, n] is the gain from transmitter m to receiver n; all gains are
    strictly positive and the matrix need not be symmetric.
    """

    gains: np.ndarray
    noise_floor: float = 0.1
    n_games: int = 1
    bounds: Bounds | None = None

    def __post_init__(self):
        gains = np.ascontiguousarray(self.gains, dtype=float)
        if gains.ndim != 2 or gains.shape[0] != gains.shape[1]:
            raise ValueError("gains must be a square matrix")
        if not np.all(gains > 0):
            raise ValueError("all channel gains must be strictly positive")
        if not self.noise_floor > 0:
            raise ValueError("noise floor must be positive")
        if self.n_games < 1:
            raise ValueError("n_games must be at least 1")
        bounds = self.bounds or Bounds.uniform(gains.shape[0], 1.0)
        if bounds.n_players != gains.shape[0]:
            raise ValueError("bounds length does not match the gain matrix")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "noise_floor", float(self.noise_floor))
        object.__setattr__(self, "bounds", bounds)

    @property
    def n_players(self) -> int:
        return self.gains.shape[0]

    def evaluate(self, games, actions):
        return power_control_reward(self, games, actions)


@dataclass(frozen=True, eq=False)
class TaskAllocationInstance(RewardField):
    """Task utility offsets alpha[g] >= 1 and agent proficiencies beta[m, g]."""

    alpha: np.ndarray
    beta: np.ndarray
    bounds: Bounds | None = None

    def __post_init__(self):
        alpha = np.ascontiguousarray(self.alpha, dtype=float)
        beta = np.ascontiguousarray(self.beta, dtype=float)
        if alpha.ndim != 1:
            raise ValueError("alpha must be a 1-d vector, one entry per task")
        if beta.ndim != 2 or beta.shape[1] != alpha.shape[0]:
            raise ValueError("beta must have shape (n_players, n_tasks)")
        if not np.all(alpha >= 1):
            raise ValueError("alpha entries must be >= 1")
        if not np.all(beta >= 0):
            raise ValueError("beta entries must be non-negative")
        bounds = self.bounds or Bounds.uniform(beta.shape[0], 10.0)
        if bounds.n_players != beta.shape[0]:
            raise ValueError("bounds length does not match beta")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "bounds", bounds)

    @property
    def n_players(self) -> int:
        return self.beta.shape[0]

    @property
    def n_games(self) -> int:
        return self.alpha.shape[0]

    def evaluate(self, games, actions):
        return task_allocation_reward(self, games, actions)


@dataclass(frozen=True, eq=False)
class SensorNetworkInstance(RewardField):
    """Sensor relay network with a distinguished always-on sink.

    `adjacency` is the symmetric sensor-to-sensor connectivity and
    `sink_links[n]` says whether sensor n can reach the sink directly.  A
    sensor's observation is delivered when the sensor is active and some path
    of active sensors ends at a sink link.  Actions are off-probabilities, so
    the action box is always [0, 1].
    """

    adjacency: np.ndarray
    sink_links: np.ndarray
    packets_per_round: int = 100
    value_scale: float = 0.8
    offset: float = 0.8
    energy_weight: float = 2.0
    n_games: int = 1

    def __post_init__(self):
        adjacency = np.ascontiguousarray(self.adjacency, dtype=bool)
        sink_links = np.ascontiguousarray(self.sink_links, dtype=bool)
        n = adjacency.shape[0]
        if adjacency.ndim != 2 or adjacency.shape != (n, n):
            raise ValueError("adjacency must be a square matrix")
        if sink_links.shape != (n,):
            raise ValueError("sink_links must have one flag per sensor")
        if not np.array_equal(adjacency, adjacency.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adjacency)):
            raise ValueError("adjacency must have a zero diagonal")
        if n > MAX_ENUMERATION_SENSORS:
            raise ValueError(
                f"{n} sensors would need 2^{n} enumeration; limit is "
                f"{MAX_ENUMERATION_SENSORS}"
            )
        if self.packets_per_round < 1:
            raise ValueError("packets_per_round must be at least 1")
        if not (self.value_scale > 0 and self.energy_weight > 0):
            raise ValueError("value_scale and energy_weight must be positive")
        if self.n_games != 1:
            raise ValueError("the sensor game is single-game only")
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "sink_links", sink_links)
        object.__setattr__(self, "packets_per_round", int(self.packets_per_round))
        object.__setattr__(self, "value_scale", float(self.value_scale))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "energy_weight", float(self.energy_weight))

    @property
    def n_players(self) -> int:
        return self.adjacency.shape[0]

    @property
    def bounds(self) -> Bounds:
        return Bounds.uniform(self.n_players, 1.0)

    @cached_property
    def _activation_masks(self) -> np.ndarray:
        # Row s: boolean activity of each sensor in enumeration state s.
        n = self.n_players
        states = np.arange(1 << n, dtype=np.uint32)
        return (states[:, None] >> np.arange(n)[None, :].astype(np.uint32)) & 1 == 1

    @cached_property
    def _success_table(self) -> np.ndarray:
        # success[s, n]: sensor n delivers in activation state s.
        n = self.n_players
        neighbor_mask = [0] * n
        for i in range(n):
            for j in range(n):
                if self.adjacency[i, j]:
                    neighbor_mask[i] |= 1 << j
        sink_mask = 0
        for i in range(n):
            if self.sink_links[i]:
                sink_mask |= 1 << i
        success = np.zeros((1 << n, n), dtype=np.float64)
        for state in range(1 << n):
            frontier = state & sink_mask
            reached = 0
            while frontier:
                reached |= frontier
                grow = 0
                f = frontier
                while f:
                    i = (f & -f).bit_length() - 1
                    grow |= neighbor_mask[i]
                    f &= f - 1
                frontier = grow & state & ~reached
            for i in range(n):
                if reached >> i & 1:
                    success[state, i] = 1.0
        return success

    def evaluate(self, games, actions):
        probs = sensor_delivery_probability_exact(self, actions)
        return sensor_reward(self, actions, probs)

    def feedback_sample(self, games, actions, rng):
        return sensor_feedback_sample(self, actions, rng)


def power_control_reward(
    instance: PowerControlInstance, games, actions
) -> np.ndarray:
    """SINR per player: own gain times action over noise floor plus the
    same-game interference sum."""
    g = game_assignment(games, instance.n_games)
    x = action_profile(actions)
    n = instance.n_players
    if g.shape[0] != n or x.shape[0] != n:
        raise ValueError(f"instance expects {n} players")
    same = g[:, None] == g[None, :]
    np.fill_diagonal(same, False)
    interference = (instance.gains * same).T @ x
    own = np.diag(instance.gains)
    return own * x / (instance.noise_floor + interference)


def task_allocation_reward(
    instance: TaskAllocationInstance, games, actions
) -> np.ndarray:
    """Effort-share split of the log task utility; a 0/0 share counts as 0."""
    g = game_assignment(games, instance.n_games)
    x = action_profile(actions)
    n = instance.n_players
    if g.shape[0] != n or x.shape[0] != n:
        raise ValueError(f"instance expects {n} players")
    weights = instance.beta[np.arange(n), g - 1] * x
    totals = np.bincount(g - 1, weights=weights, minlength=instance.n_games)
    player_totals = totals[g - 1]
    utility = np.log(instance.alpha[g - 1] + player_totals)
    safe = np.where(player_totals > 0, player_totals, 1.0)
    return np.where(player_totals > 0, weights / safe * utility, 0.0)


def sensor_delivery_probability_exact(
    instance: SensorNetworkInstance, actions
) -> np.ndarray:
    """Exact delivery probability per sensor by enumerating all 2^N
    activation states (sensor m is active with probability 1 - x_m)."""
    x = action_profile(actions, instance.bounds)
    if x.shape[0] != instance.n_players:
        raise ValueError(f"instance expects {instance.n_players} sensors")
    active = instance._activation_masks
    weights = np.prod(np.where(active, 1.0 - x, x), axis=1)
    # guard against 1e-16-scale roundoff leaving [0, 1]
    return np.clip(weights @ instance._success_table, 0.0, 1.0)


def sensor_reward(
    instance: SensorNetworkInstance, actions, delivery_prob
) -> np.ndarray:
    """value_scale * sqrt(P_n) - offset + energy_weight * x_n, floored at 0.

    The floor keeps rewards non-negative and makes the reward exactly zero at
    x_n = 0 regardless of connectivity.
    """
    x = action_profile(actions)
    p = np.asarray(delivery_prob, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("delivery probabilities must lie in [0, 1]")
    raw = instance.value_scale * np.sqrt(p) - instance.offset + instance.energy_weight * x
    return np.maximum(0.0, raw)


def sensor_feedback_sample(
    instance: SensorNetworkInstance, actions, rng: np.random.Generator
) -> np.ndarray:
    """One noisy reward observation from packet counts.

    Each sensor sees successes ~ Binomial(L, P_n) out of L packets and plugs
    the empirical rate into the reward, so the observation noise is bounded.
    """
    probs = sensor_delivery_probability_exact(instance, actions)
    draws = rng.binomial(instance.packets_per_round, probs)
    return sensor_reward(instance, actions, draws / instance.packets_per_round)


def gen_power_control(
    n_players: int,
    rng: np.random.Generator,
    n_games: int = 1,
    noise_floor: float = 0.1,
    bound: float = 1.0,
) -> PowerControlInstance:
    """Diagonal-heavy gain matrix: diagonal ~ U[0.2, 0.8], off-diagonal
    ~ U[0, 0.2] floored at 1e-9 to keep gains strictly positive."""
    gains = np.maximum(rng.uniform(0.0, 0.2, (n_players, n_players)), 1e-9)
    gains[np.diag_indices(n_players)] = rng.uniform(0.2, 0.8, n_players)
    return PowerControlInstance(
        gains=gains,
        noise_floor=noise_floor,
        n_games=n_games,
        bounds=Bounds.uniform(n_players, bound),
    )


def gen_task_allocation(
    n_players: int,
    n_tasks: int,
    rng: np.random.Generator,
    bound: float = 10.0,
) -> TaskAllocationInstance:
    """alpha ~ U[1.1, 5] per task, beta ~ U[100, 200] per (agent, task)."""
    alpha = rng.uniform(1.1, 5.0, n_tasks)
    beta = rng.uniform(100.0, 200.0, (n_players, n_tasks))
    return TaskAllocationInstance(
        alpha=alpha, beta=beta, bounds=Bounds.uniform(n_players, bound)
    )


def gen_sensor_network(
    n_sensors: int,
    edge_prob: float,
    rng: np.random.Generator,
    packets_per_round: int = 100,
    value_scale: float = 0.8,
    offset: float = 0.8,
    energy_weight: float = 2.0,
) -> SensorNetworkInstance:
    """Erdos-Renyi sensor graph; each sensor-sensor edge and each sensor-sink
    link is present independently with probability edge_prob."""
    if not 0 <= edge_prob <= 1:
        raise ValueError("edge_prob must lie in [0, 1]")
    adjacency = np.zeros((n_sensors, n_sensors), dtype=bool)
    for i in range(n_sensors):
        for j in range(i + 1, n_sensors):
            if rng.random() < edge_prob:
                adjacency[i, j] = adjacency[j, i] = True
    sink_links = rng.random(n_sensors) < edge_prob
    return SensorNetworkInstance(
        adjacency=adjacency,
        sink_links=sink_links,
        packets_per_round=packets_per_round,
        value_scale=value_scale,
        offset=offset,
        energy_weight=energy_weight,
    )


def instance_to_config(field: RewardField) -> dict:
    """Serialize an instance to a plain JSON-compatible dict."""
    if isinstance(field, PowerControlInstance):
        return {
            "kind": "power_control",
            "gains": field.gains.tolist(),
            "noise_floor": field.noise_floor,
            "n_games": field.n_games,
            "bound": field.bounds.upper.tolist(),
        }
    if isinstance(field, TaskAllocationInstance):
        return {
            "kind": "task_allocation",
            "alpha": field.alpha.tolist(),
            "beta": field.beta.tolist(),
            "bound": field.bounds.upper.tolist(),
        }
    if isinstance(field, SensorNetworkInstance):
        return {
            "kind": "sensor_network",
            "adjacency": field.adjacency.astype(int).tolist(),
            "sink_links": field.sink_links.astype(int).tolist(),
            "packets_per_round": field.packets_per_round,
            "value_scale": field.value_scale,
            "offset": field.offset,
            "energy_weight": field.energy_weight,
        }
    raise TypeError(f"cannot serialize field of type {type(field).__name__}")


def instance_from_config(config: dict) -> RewardField:
    """Rebuild an instance from `instance_to_config` output."""
    kind = config.get("kind")
    if kind == "power_control":
        return PowerControlInstance(
            gains=np.asarray(config["gains"], dtype=float),
            noise_floor=config["noise_floor"],
            n_games=config["n_games"],
            bounds=Bounds(np.asarray(config["bound"], dtype=float)),
        )
    if kind == "task_allocation":
        return TaskAllocationInstance(
            alpha=np.asarray(config["alpha"], dtype=float),
            beta=np.asarray(config["beta"], dtype=float),
            bounds=Bounds(np.asarray(config["bound"], dtype=float)),
        )
    if kind == "sensor_network":
        return SensorNetworkInstance(
            adjacency=np.asarray(config["adjacency"], dtype=bool),
            sink_links=np.asarray(config["sink_links"], dtype=bool),
            packets_per_round=config["packets_per_round"],
            value_scale=config["value_scale"],
            offset=config["offset"],
            energy_weight=config["energy_weight"],
        )
    raise ValueError(f"unknown instance kind: {kind!r}")


def instance_fingerprint(field: RewardField) -> str:
    """Short content hash identifying a concrete instance."""
    payload = json.dumps(instance_to_config(field), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]
