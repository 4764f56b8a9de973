"""Synchronous round state machines for the three QoS-learning algorithms.

All three share the projected target-tracking update
x_n <- clip(x_n + eta(t) * (lam_bar_n - y_n), 0, B_n) on a noisy scalar
observation y_n of the own reward:

* ToP: a player whose projected action lands exactly on its upper bound
  signals everyone in its (single) game, and all players reset to zero.
* FDToP: no signalling at all; boundary players just stay clamped.
* MetaToP: with K games, a boundary hitter signals its game-mates (s) and
  everyone (r); all reset, s-recipients switch to a uniformly random other
  game with probability rho, r-only recipients with probability phi.

`run_simulation` drives the rounds for a full horizon with one seeded
generator per realization, split into target / noise / switching streams so
each source of randomness is independently reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import QoSTargets, RewardField, sample_targets
from .scenarios import (
    PowerControlInstance,
    TaskAllocationInstance,
    instance_fingerprint,
)

__all__ = [
    "ALGORITHMS",
    "StepsizeSchedule",
    "NoiseModel",
    "PlayerRuntime",
    "RoundEvents",
    "TailSummary",
    "EventLog",
    "Trace",
    "stepsize",
    "top_round",
    "fdtop_round",
    "metatop_round",
    "run_simulation",
]

ALGORITHMS = ("ToP", "FDToP", "MetaToP")
NOISE_KINDS = ("gaussian", "truncated-gaussian", "binomial-feedback", "none")


@dataclass(frozen=True)
class StepsizeSchedule:
    """Power-law stepsizes eta(t) = scale / (t + offset)^exponent.

    Constrained so that 0 < eta(t) < 1 for all t, eta is strictly decreasing,
    and the exponent lies in (0.5, 1] (summable squares, divergent sum).
    """

    scale: float = 1.0
    offset: float = 100.0
    exponent: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not self.offset > 0:
            raise ValueError("offset must be positive")
        if not 0.5 < self.exponent <= 1.0:
            raise ValueError("exponent must lie in (0.5, 1]")
        if not self.scale / self.offset**self.exponent < 1.0:
            raise ValueError("initial stepsize must be below 1: scale/offset^exponent >= 1")

    def value(self, t: int) -> float:
        return self.scale / (t + self.offset) ** self.exponent

    def values(self, horizon: int) -> np.ndarray:
        ts = np.arange(horizon, dtype=float)
        return self.scale / (ts + self.offset) ** self.exponent


def stepsize(schedule: StepsizeSchedule, t: int) -> float:
    """Stepsize at round t."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return schedule.value(t)


@dataclass(frozen=True)
class NoiseModel:
    """Additive observation noise, or the scenario's structural feedback.

    'gaussian' adds sigma * N(0, 1) per player per round.
    'truncated-gaussian' additionally clips to [-clip, clip], so the noise
    has bounded support and stays mean-zero (clipping is symmetric).
    'binomial-feedback' delegates to the scenario's own feedback channel.
    'none' observes the clean reward.
    """

    kind: str = "gaussian"
    sigma: float = 0.1
    clip: float = math.inf

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind in ("gaussian", "truncated-gaussian") and not self.sigma > 0:
            raise ValueError("sigma must be positive for gaussian noise")
        if self.kind == "truncated-gaussian" and not (0 < self.clip < math.inf):
            raise ValueError("truncated-gaussian needs a finite positive clip bound")

    @property
    def additive(self) -> bool:
        return self.kind in ("gaussian", "truncated-gaussian")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(n)
        if not self.additive:
            raise ValueError("binomial feedback is structural; sample via the field")
        draw = rng.standard_normal(n) * self.sigma
        if self.kind == "truncated-gaussian":
            np.clip(draw, -self.clip, self.clip, out=draw)
        return draw

    def pregenerate(self, rng: np.random.Generator, horizon: int, n: int) -> np.ndarray:
        """Batched version of `sample`, consuming the same stream values."""
        draw = rng.standard_normal((horizon, n)) * self.sigma
        if self.kind == "truncated-gaussian":
            np.clip(draw, -self.clip, self.clip, out=draw)
        return draw


@dataclass(eq=False)
class PlayerRuntime:
    """Joint learner state, stored column-wise over players."""

    actions: np.ndarray
    games: np.ndarray
    targets: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.actions = np.ascontiguousarray(self.actions, dtype=float)
        self.games = np.ascontiguousarray(self.games, dtype=np.int64)
        self.targets = np.ascontiguousarray(self.targets, dtype=float)
        self.upper = np.ascontiguousarray(self.upper, dtype=float)
        n = self.actions.shape[0]
        if not (self.games.shape[0] == self.targets.shape[0] == self.upper.shape[0] == n):
            raise ValueError("state vectors must all have one entry per player")
        if np.any(self.actions < 0) or np.any(self.actions > self.upper):
            raise ValueError("actions must lie in [0, upper]")

    @property
    def n_players(self) -> int:
        return self.actions.shape[0]


@dataclass
class RoundEvents:
    """Signalling outcome of one synchronous round."""

    boundary_hitters: frozenset
    s_recipients: frozenset
    r_broadcast: bool
    switches: dict
    resets_applied: bool

    @classmethod
    def quiet(cls) -> "RoundEvents":
        return cls(frozenset(), frozenset(), False, {}, False)


def _round_core(algorithm, field, state, eta_t, noise, rng, switch_rng, rho, phi):
    """One synchronous round; returns (x_next, games_next, u, y, events).

    Players observe simultaneously, update simultaneously, and signals act
    before round t+1: a reset zeroes the post-projection actions within the
    same round.
    """
    x, games = state.actions, state.games
    n = x.shape[0]
    u = field.evaluate(games, x)
    if noise.kind == "binomial-feedback":
        y = field.feedback_sample(games, x, rng)
    else:
        y = u + noise.sample(rng, n)
    x_next = np.minimum(state.upper, np.maximum(0.0, x + eta_t * (state.targets - y)))
    hitters = frozenset(np.flatnonzero(x_next == state.upper).tolist())
    games_next = games
    if not hitters:
        return x_next, games_next, u, y, RoundEvents.quiet()

    if algorithm == "FDToP":
        return x_next, games_next, u, y, RoundEvents.quiet()

    if algorithm == "ToP":
        x_next = np.zeros(n)
        events = RoundEvents(
            boundary_hitters=hitters,
            s_recipients=frozenset(range(n)),
            r_broadcast=False,
            switches={},
            resets_applied=True,
        )
        return x_next, games_next, u, y, events

    # MetaToP: reset everyone, then draw switches in player order.  Every
    # player draws one uniform; a switcher draws a second one to pick a
    # uniformly random other game.
    hit_games = {int(games[i]) for i in hitters}
    s_recipients = frozenset(
        i for i in range(n) if int(games[i]) in hit_games
    )
    x_next = np.zeros(n)
    games_next = games.copy()
    n_games = field.n_games
    switches = {}
    for i in range(n):
        prob = rho if i in s_recipients else phi
        if switch_rng.random() < prob:
            draw = switch_rng.random()
            dest = 1 + int(draw * (n_games - 1))
            if dest >= games[i]:
                dest += 1
            games_next[i] = dest
            switches[i] = dest
    events = RoundEvents(
        boundary_hitters=hitters,
        s_recipients=s_recipients,
        r_broadcast=True,
        switches=switches,
        resets_applied=True,
    )
    return x_next, games_next, u, y, events


def _require_single_game(field: RewardField):
    if field.n_games != 1:
        raise ValueError("ToP and FDToP run on single-game fields only")


def top_round(state, field, schedule, noise, t, rng):
    """One ToP round: update, boundary signal, global reset."""
    _require_single_game(field)
    x, g, _, _, events = _round_core(
        "ToP", field, state, schedule.value(t), noise, rng, rng, 0.0, 0.0
    )
    return PlayerRuntime(x, g, state.targets, state.upper), events


def fdtop_round(state, field, schedule, noise, t, rng):
    """One FDToP round: projection only, no signalling."""
    _require_single_game(field)
    x, g, _, _, events = _round_core(
        "FDToP", field, state, schedule.value(t), noise, rng, rng, 0.0, 0.0
    )
    return PlayerRuntime(x, g, state.targets, state.upper), events


def metatop_round(state, field, schedule, noise, switch_probs, t, rng, switch_rng=None):
    """One MetaToP round: update, s/r signals, reset, probabilistic switches."""
    rho, phi = switch_probs
    _validate_switch_probs(rho, phi)
    if field.n_games < 2:
        raise ValueError("MetaToP needs at least two games")
    x, g, _, _, events = _round_core(
        "MetaToP",
        field,
        state,
        schedule.value(t),
        noise,
        rng,
        switch_rng if switch_rng is not None else rng,
        rho,
        phi,
    )
    return PlayerRuntime(x, g, state.targets, state.upper), events


def _validate_switch_probs(rho, phi):
    if not (0 < phi <= rho < 1):
        raise ValueError("switch probabilities must satisfy 0 < phi <= rho < 1")


@dataclass(eq=False)
class TailSummary:
    """Means over the final stretch of the horizon (default: last 10%)."""

    start_round: int
    actions_mean: np.ndarray
    reward_true_mean: np.ndarray
    reward_observed_mean: np.ndarray
    min_reward_mean: float


@dataclass
class EventLog:
    resets: int = 0
    switches: int = 0
    last_reset: int = -1
    last_switch: int = -1


@dataclass(eq=False)
class Trace:
    """Recorded rounds of one realization plus exact tail statistics.

    Records cover rounds 0, stride, 2*stride, ... and always the final round;
    flags describe the events of the recorded round itself.  Tail statistics
    and event counts are accumulated over every round regardless of stride.
    """

    rounds: np.ndarray
    actions: np.ndarray
    games: np.ndarray
    reward_true: np.ndarray
    reward_observed: np.ndarray
    reset: np.ndarray
    switch: np.ndarray
    seed: int
    fingerprint: str
    lambda_bar: np.ndarray
    final_actions: np.ndarray
    final_games: np.ndarray
    tail: TailSummary
    events: EventLog

    @property
    def n_players(self) -> int:
        return self.lambda_bar.shape[0]


def _recorded_rounds(horizon: int, stride: int) -> np.ndarray:
    if horizon == 0:
        return np.empty(0, dtype=np.int64)
    rounds = np.arange(0, horizon, stride, dtype=np.int64)
    if rounds[-1] != horizon - 1:
        rounds = np.append(rounds, horizon - 1)
    return rounds


def _tail_start(horizon: int) -> int:
    return horizon - max(1, horizon // 10) if horizon > 0 else 0


def run_simulation(
    algorithm: str,
    field: RewardField,
    targets: QoSTargets,
    schedule: StepsizeSchedule,
    noise: NoiseModel,
    horizon: int,
    seed: int,
    rho: float = 0.2,
    phi: float = 0.1,
    record_stride: int = 1,
    engine: str = "auto",
) -> Trace:
    """Run one seeded realization and return its trace.

    The realization seed feeds four sub-streams (instance, targets, noise,
    switching); the first is reserved for callers that sample the instance
    itself.  Identical arguments give bit-identical traces.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    if record_stride < 1:
        raise ValueError("record_stride must be at least 1")
    if algorithm == "MetaToP":
        if field.n_games < 2:
            raise ValueError("MetaToP needs a field with at least two games")
        _validate_switch_probs(rho, phi)
    else:
        _require_single_game(field)
    n = field.n_players
    if targets.lam.shape[0] != n:
        raise ValueError("targets must have one entry per player")
    if noise.kind == "binomial-feedback" and type(field).feedback_sample is RewardField.feedback_sample:
        raise ValueError(f"{type(field).__name__} defines no structural feedback")

    _, target_ss, noise_ss, switch_ss = np.random.SeedSequence(seed).spawn(4)
    lam_bar = sample_targets(targets, np.random.default_rng(target_ss)).lam_bar
    try:
        fingerprint = instance_fingerprint(field)
    except TypeError:
        fingerprint = f"custom:{type(field).__name__}"

    if engine == "auto":
        # exact types only: subclasses may override evaluate, which the
        # kernels cannot see
        engine = (
            "numba"
            if type(field) in (PowerControlInstance, TaskAllocationInstance)
            else "python"
        )
    if engine not in ("numba", "python"):
        raise ValueError(f"unknown engine {engine!r}")

    rec_rounds = _recorded_rounds(horizon, record_stride)
    n_rec = rec_rounds.shape[0]
    rec = {
        "actions": np.zeros((n_rec, n)),
        "games": np.zeros((n_rec, n), dtype=np.int64),
        "true": np.zeros((n_rec, n)),
        "obs": np.zeros((n_rec, n)),
        "reset": np.zeros(n_rec, dtype=bool),
        "switch": np.zeros((n_rec, n), dtype=bool),
    }
    tail_start = _tail_start(horizon)
    tail_len = horizon - tail_start

    if engine == "numba" and horizon > 0:
        final_x, final_g, tail_sums, tail_extra, log = _run_kernel(
            algorithm, field, lam_bar, schedule, noise, horizon, rho, phi,
            noise_ss, switch_ss, rec_rounds, rec, tail_start,
        )
    else:
        final_x, final_g, tail_sums, tail_extra, log = _run_python(
            algorithm, field, lam_bar, schedule, noise, horizon, rho, phi,
            noise_ss, switch_ss, rec_rounds, rec, tail_start,
        )

    if horizon > 0:
        tail = TailSummary(
            start_round=tail_start,
            actions_mean=tail_sums[0] / tail_len,
            reward_true_mean=tail_sums[1] / tail_len,
            reward_observed_mean=tail_sums[2] / tail_len,
            min_reward_mean=tail_extra[0] / tail_len,
        )
    else:
        tail = TailSummary(0, np.full(n, np.nan), np.full(n, np.nan), np.full(n, np.nan), np.nan)

    return Trace(
        rounds=rec_rounds,
        actions=rec["actions"],
        games=rec["games"],
        reward_true=rec["true"],
        reward_observed=rec["obs"],
        reset=rec["reset"],
        switch=rec["switch"],
        seed=seed,
        fingerprint=fingerprint,
        lambda_bar=lam_bar,
        final_actions=final_x,
        final_games=final_g,
        tail=tail,
        events=log,
    )


def _initial_games(algorithm, field, switch_rng) -> np.ndarray:
    n = field.n_players
    if algorithm != "MetaToP":
        return np.ones(n, dtype=np.int64)
    draws = switch_rng.random(n)
    return 1 + (draws * field.n_games).astype(np.int64)


def _run_python(
    algorithm, field, lam_bar, schedule, noise, horizon, rho, phi,
    noise_ss, switch_ss, rec_rounds, rec, tail_start,
):
    n = field.n_players
    noise_rng = np.random.default_rng(noise_ss)
    switch_rng = np.random.default_rng(switch_ss)
    games = _initial_games(algorithm, field, switch_rng)
    state = PlayerRuntime(np.zeros(n), games, lam_bar, field.bounds.upper.copy())
    tail_sums = np.zeros((3, n))
    tail_extra = np.zeros(1)
    log = EventLog()
    rec_ptr = 0
    n_rec = rec_rounds.shape[0]
    for t in range(horizon):
        x_next, games_next, u, y, events = _round_core(
            algorithm, field, state, schedule.value(t), noise, noise_rng,
            switch_rng, rho, phi,
        )
        if rec_ptr < n_rec and rec_rounds[rec_ptr] == t:
            rec["actions"][rec_ptr] = state.actions
            rec["games"][rec_ptr] = state.games
            rec["true"][rec_ptr] = u
            rec["obs"][rec_ptr] = y
            rec["reset"][rec_ptr] = events.resets_applied
            for i in events.switches:
                rec["switch"][rec_ptr, i] = True
            rec_ptr += 1
        if t >= tail_start:
            tail_sums[0] += state.actions
            tail_sums[1] += u
            tail_sums[2] += y
            tail_extra[0] += u.min()
        if events.resets_applied:
            log.resets += 1
            log.last_reset = t
        if events.switches:
            log.switches += len(events.switches)
            log.last_switch = t
        state = PlayerRuntime(x_next, games_next, lam_bar, state.upper)
    return state.actions, state.games, tail_sums, tail_extra, log


def _run_kernel(
    algorithm, field, lam_bar, schedule, noise, horizon, rho, phi,
    noise_ss, switch_ss, rec_rounds, rec, tail_start,
):
    n = field.n_players
    if type(field) is PowerControlInstance:
        scenario = _kernels.SCEN_POWER
        gains, floor = field.gains, field.noise_floor
        alpha, beta = np.zeros(1), np.zeros((1, 1))
    elif type(field) is TaskAllocationInstance:
        scenario = _kernels.SCEN_TASK
        gains, floor = np.zeros((1, 1)), 1.0
        alpha, beta = field.alpha, field.beta
    else:
        raise ValueError(f"no kernel for field type {type(field).__name__}")
    algo_code = {"ToP": _kernels.ALGO_TOP, "FDToP": _kernels.ALGO_FDTOP,
                 "MetaToP": _kernels.ALGO_METATOP}[algorithm]

    eta = schedule.values(horizon)
    if noise.additive:
        noise_arr = noise.pregenerate(np.random.default_rng(noise_ss), horizon, n)
        has_noise = True
    else:
        noise_arr = np.zeros((1, 1))
        has_noise = False

    pool_size = 8192 + 2 * n
    while True:
        switch_rng = np.random.default_rng(switch_ss)
        if algorithm == "MetaToP":
            pool = switch_rng.random(pool_size)
            games0 = 1 + (pool[:n] * field.n_games).astype(np.int64)
            pool_start = n
        else:
            pool = np.zeros(1)
            games0 = np.ones(n, dtype=np.int64)
            pool_start = 0
        final_x = np.zeros(n)
        final_g = np.zeros(n, dtype=np.int64)
        tail_sums = np.zeros((3, n))
        tail_extra = np.zeros(1)
        events = np.zeros(6, dtype=np.int64)
        for arr in (rec["actions"], rec["true"], rec["obs"]):
            arr.fill(0.0)
        rec["games"].fill(0)
        rec["reset"].fill(False)
        rec["switch"].fill(False)
        _kernels.simulate(
            scenario, gains, floor, alpha, beta, algo_code,
            lam_bar, field.bounds.upper, games0, eta, noise_arr, has_noise,
            pool, pool_start, rho, phi, field.n_games,
            rec_rounds, rec["actions"], rec["games"], rec["true"], rec["obs"],
            rec["reset"], rec["switch"],
            tail_start, tail_sums, tail_extra, final_x, final_g, events,
        )
        if events[5] == 0:
            break
        # Rare: the switch pool ran dry.  A larger pool from the same stream
        # replays the identical prefix, so the rerun is bit-compatible.
        pool_size *= 4

    log = EventLog(
        resets=int(events[0]),
        switches=int(events[1]),
        last_reset=int(events[2]),
        last_switch=int(events[3]),
    )
    return final_x, final_g, tail_sums, tail_extra, log
