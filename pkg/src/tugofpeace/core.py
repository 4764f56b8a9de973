"""Shared domain types for multi-game QoS learning.

Players hold one action each inside a box [0, B_n] and participate in one of
K concurrent games.  A reward field maps (game assignment, action profile) to
per-player rewards.  In a tug-of-war game, raising one player's action
strictly lowers every other same-game player's reward, while players in other
games are unaffected.  This module contains the state/target types, the box
projection, QoS target randomization, and a finite-difference checker for the
tug-of-war condition.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Bounds",
    "QoSTargets",
    "RandomizedTargets",
    "RewardField",
    "ToWConditionReport",
    "action_profile",
    "check_tow_condition",
    "evaluate_rewards",
    "game_assignment",
    "project",
    "sample_targets",
]


def project(value, lower, upper):
    """Euclidean projection onto [lower, upper].

    Accepts scalars or arrays (broadcast like numpy).  Requires lower <= upper.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        raise ValueError("projection interval is empty: lower > upper")
    out = np.minimum(upper, np.maximum(lower, value))
    if np.isscalar(value) or np.ndim(value) == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class Bounds:
    """Per-player action bounds [0, upper_n]; the lower bound is always 0."""

    upper: np.ndarray

    def __post_init__(self):
        upper = np.ascontiguousarray(self.upper, dtype=float)
        if upper.ndim != 1:
            raise ValueError("bounds must be a 1-d vector")
        if not np.all(upper > 0):
            raise ValueError("all upper bounds must be positive")
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, n_players: int, upper: float) -> "Bounds":
        return cls(np.full(n_players, float(upper)))

    @property
    def n_players(self) -> int:
        return self.upper.shape[0]

    def clip(self, actions) -> np.ndarray:
        return np.minimum(self.upper, np.maximum(0.0, actions))


def action_profile(values, bounds: Bounds | None = None) -> np.ndarray:
    """Validate an action profile: non-negative, within bounds if given."""
    x = np.ascontiguousarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError("action profile must be a 1-d vector")
    if np.any(x < 0):
        raise ValueError("actions must be non-negative")
    if bounds is not None:
        if x.shape[0] != bounds.n_players:
            raise ValueError(
                f"action profile has {x.shape[0]} entries, bounds expect {bounds.n_players}"
            )
        if np.any(x > bounds.upper):
            raise ValueError("actions exceed upper bounds")
    return x


def game_assignment(values, n_games: int) -> np.ndarray:
    """Validate a game assignment: integer labels in {1, ..., n_games}."""
    g = np.ascontiguousarray(values, dtype=np.int64)
    if g.ndim != 1:
        raise ValueError("game assignment must be a 1-d vector")
    if np.any((g < 1) | (g > n_games)):
        raise ValueError(f"game labels must lie in 1..{n_games}")
    return g


@dataclass(frozen=True, eq=False)
class QoSTargets:
    """Per-player QoS reward levels and the randomization width delta."""

    lam: np.ndarray
    delta: float = 0.01

    def __post_init__(self):
        lam = np.ascontiguousarray(self.lam, dtype=float)
        if lam.ndim != 1 or not np.all(lam > 0):
            raise ValueError("QoS levels must be a 1-d vector of positive reals")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "delta", float(self.delta))

    @classmethod
    def uniform(cls, n_players: int, level: float, delta: float = 0.01) -> "QoSTargets":
        return cls(np.full(n_players, float(level)), delta)


@dataclass(frozen=True, eq=False)
class RandomizedTargets:
    """Targets drawn uniformly from [lam, lam + delta], one per player."""

    lam_bar: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "lam_bar", np.ascontiguousarray(self.lam_bar, dtype=float)
        )


def sample_targets(targets: QoSTargets, rng: np.random.Generator) -> RandomizedTargets:
    """Draw lam_bar_n ~ Unif[lam_n, lam_n + delta] independently per player."""
    lam_bar = targets.lam + targets.delta * rng.random(targets.lam.shape[0])
    return RandomizedTargets(lam_bar)


class RewardField(abc.ABC):
    """An evaluatable game: (assignment, actions) -> per-player rewards.

    Concrete fields expose `n_players`, `n_games` and `bounds` attributes and
    a deterministic `evaluate`.  Rewards are non-negative everywhere and zero
    for a player whose action is zero.
    """

    n_players: int
    n_games: int
    bounds: Bounds

    @abc.abstractmethod
    def evaluate(self, games: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Return the reward vector at (games, actions).  No randomness."""

    def feedback_sample(
        self, games: np.ndarray, actions: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        """Draw one noisy reward observation where the scenario defines its
        own feedback channel.  Default: not available."""
        raise NotImplementedError(f"{type(self).__name__} has no structural feedback")


def evaluate_rewards(
    field: RewardField, games: np.ndarray, actions: np.ndarray
) -> np.ndarray:
    """Evaluate a reward field after validating dimensions and domains."""
    g = game_assignment(games, field.n_games)
    x = action_profile(actions, field.bounds)
    if g.shape[0] != field.n_players or x.shape[0] != field.n_players:
        raise ValueError(
            f"field expects {field.n_players} players, got assignment of length "
            f"{g.shape[0]} and profile of length {x.shape[0]}"
        )
    return field.evaluate(g, x)


@dataclass(eq=False)
class ToWConditionReport:
    """Finite-difference sweep of all cross partials d u_n / d x_m, n != m.

    `estimates[p, n, m]` is the central-difference estimate at sample point p
    (diagonal entries are NaN).  Violations are judged at the tolerance of
    the finite-difference error floor: a same-game pair whose estimate is
    positive beyond `tolerance`, or a cross-game pair whose |estimate|
    exceeds it.  Partials that are structurally zero (a sensor with its own
    sink link, players in different games) then pass, while any genuinely
    positive dependence is flagged.
    """

    estimates: np.ndarray
    same_game_violations: list = field(default_factory=list)
    cross_game_violations: list = field(default_factory=list)
    step: float = 1e-4
    tolerance: float = 1e-6

    @property
    def ok(self) -> bool:
        return not self.same_game_violations and not self.cross_game_violations


def check_tow_condition(
    field: RewardField,
    games: np.ndarray,
    sample_points,
    step: float = 1e-4,
    tolerance: float = 1e-6,
) -> ToWConditionReport:
    """Estimate all pairwise action partials at interior sample points.

    Sample points must be strictly interior and leave room for the central
    difference: step <= x_m and x_m + step <= B_m for every coordinate.
    """
    g = game_assignment(games, field.n_games)
    n = field.n_players
    upper = field.bounds.upper
    points = [action_profile(p) for p in sample_points]
    for p, x in enumerate(points):
        if x.shape[0] != n:
            raise ValueError(f"sample point {p} has wrong length")
        if np.any(x - step < 0) or np.any(x + step > upper):
            raise ValueError(
                f"sample point {p} is too close to the boundary for step {step}"
            )

    estimates = np.full((len(points), n, n), np.nan)
    report = ToWConditionReport(estimates, step=step, tolerance=tolerance)
    for p, x in enumerate(points):
        for m in range(n):
            bump = np.zeros(n)
            bump[m] = step
            u_plus = field.evaluate(g, x + bump)
            u_minus = field.evaluate(g, x - bump)
            col = (u_plus - u_minus) / (2.0 * step)
            estimates[p, :, m] = col
            estimates[p, m, m] = np.nan
            for i in range(n):
                if i == m:
                    continue
                est = col[i]
                if g[i] == g[m]:
                    if est > tolerance:
                        report.same_game_violations.append((p, i, m, float(est)))
                elif abs(est) > tolerance:
                    report.cross_game_violations.append((p, i, m, float(est)))
    return report
