"""Independent equilibrium computations used to cross-check learner runs.

The reward-target dynamics x' = lam_bar - u(g, x) form a cooperative system:
raising any action lowers other same-game rewards, so the flow is monotone
and the trajectory started from the zero profile runs component-wise below
every other solution, which makes its limit the minimal equilibrium.  This
module integrates those dynamics with a projected forward-Euler scheme,
solves the power-control equilibrium exactly as a linear system, and checks
feasibility and local stability (Jacobian spectra per game block).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import RewardField, action_profile, game_assignment
from .scenarios import (
    PowerControlInstance,
    SensorNetworkInstance,
    TaskAllocationInstance,
)

__all__ = [
    "OdeTrajectory",
    "SpectrumSummary",
    "EquilibriumReport",
    "FeasibilityResult",
    "integrate_ode",
    "minimal_equilibrium",
    "power_control_equilibrium_linear",
    "check_feasibility",
    "jacobian_spectrum",
]

#: default integrator settings: the Euler map mirrors the learner update with
#: a fixed deterministic stepsize, so it is the natural noiseless limit.
DEFAULT_DT = 1e-3
DEFAULT_MAX_TIME = 1000.0
DEFAULT_TOL = 1e-9
INTERIOR_MARGIN_FRAC = 1e-6


@dataclass(eq=False)
class OdeTrajectory:
    """Projected-Euler trajectory of the target-tracking dynamics."""

    times: np.ndarray
    profiles: np.ndarray
    terminal: np.ndarray
    converged: bool
    boundary_pinned: bool
    residual_inf: float
    steps: int


@dataclass(eq=False)
class SpectrumSummary:
    """Per-game-block eigenvalues of the reward Jacobian Du at a profile.

    `max_real` / `min_abs_real` summarize all blocks; eigenvalues whose real
    part sits within the hyperbolicity tolerance of the imaginary axis are
    listed in `warnings`.
    """

    eigenvalues: dict
    max_real: float
    min_abs_real: float
    hyperbolic: bool
    warnings: list = field(default_factory=list)


@dataclass(eq=False)
class EquilibriumReport:
    """Outcome of an equilibrium computation.

    status is one of 'converged', 'infeasible', 'boundary_pinned',
    'inconclusive'.  `minimal` is asserted only for routes that are known to
    reach the component-wise smallest equilibrium (integration from zero, or
    the unique linear power-control solution).
    """

    status: str
    equilibrium: np.ndarray | None
    residual_inf: float
    interior: bool
    minimal: bool
    spectrum: SpectrumSummary | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass(eq=False)
class FeasibilityResult:
    """'feasible', 'infeasible', or 'unknown', with a witness when feasible."""

    status: str
    witness: np.ndarray | None
    report: EquilibriumReport

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _fast_evaluator(field: RewardField, games: np.ndarray):
    """Precompute assignment-dependent structure so the integration loop only
    pays for arithmetic.  Matches field.evaluate up to float rounding.
    Exact-type dispatch: subclasses with custom evaluate take the generic path.
    """
    if type(field) is PowerControlInstance:
        same = games[:, None] == games[None, :]
        np.fill_diagonal(same, False)
        cross = np.ascontiguousarray((field.gains * same).T)
        own = np.diag(field.gains).copy()
        floor = field.noise_floor

        def evaluate(x):
            return own * x / (floor + cross @ x)

        return evaluate
    if type(field) is TaskAllocationInstance:
        idx = games - 1
        own_beta = field.beta[np.arange(field.n_players), idx]
        alpha_g = field.alpha[idx]
        k = field.n_games

        def evaluate(x):
            weights = own_beta * x
            totals = np.bincount(idx, weights=weights, minlength=k)[idx]
            safe = np.where(totals > 0, totals, 1.0)
            return np.where(totals > 0, weights / safe * np.log(alpha_g + totals), 0.0)

        return evaluate
    if type(field) is SensorNetworkInstance:
        active = field._activation_masks
        success = field._success_table
        scale, off, energy = field.value_scale, field.offset, field.energy_weight

        def evaluate(x):
            weights = np.prod(np.where(active, 1.0 - x, x), axis=1)
            probs = np.clip(weights @ success, 0.0, 1.0)
            return np.maximum(0.0, scale * np.sqrt(probs) - off + energy * x)

        return evaluate
    return lambda x: field.evaluate(games, x)


def integrate_ode(
    field: RewardField,
    games,
    x0,
    lambda_bar,
    dt: float = DEFAULT_DT,
    max_time: float = DEFAULT_MAX_TIME,
    tol: float = DEFAULT_TOL,
    record_stride: int | None = None,
) -> OdeTrajectory:
    """Integrate x <- clip(x + dt * (lambda_bar - u(g, x)) , 0, B).

    Stops when the sup-norm residual |lambda_bar - u| drops below `tol`, when
    the projected step stalls (a boundary-pinned stationary point), or at
    `max_time`.  With tol=0 the integrator runs for exactly
    round(max_time / dt) steps and never stops early, which gives a fixed,
    comparable time grid.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    g = game_assignment(games, field.n_games)
    x = action_profile(x0, field.bounds).copy()
    lam_bar = np.ascontiguousarray(lambda_bar, dtype=float)
    if lam_bar.shape != x.shape:
        raise ValueError("lambda_bar must match the profile length")
    upper = field.bounds.upper
    max_steps = int(round(max_time / dt))
    if record_stride is None:
        record_stride = max(1, max_steps // 2000)
    stall_tol = 0.01 * dt * tol

    evaluate = _fast_evaluator(field, g)
    times = [0.0]
    profiles = [x.copy()]
    converged = False
    stalled = False
    residual = np.inf
    step = 0
    # Stopping conditions are only probed every few steps; that can overshoot
    # the first step satisfying them, which only tightens the result.
    check_every = 16
    drift = np.empty_like(x)
    x_prev = np.empty_like(x)
    while step < max_steps:
        u = evaluate(x)
        checking = tol > 0 and step % check_every == 0
        if checking:
            if not np.all(np.isfinite(u)):
                raise FloatingPointError("reward evaluation produced non-finite values")
            residual = float(np.max(np.abs(lam_bar - u)))
            if residual < tol:
                converged = True
                break
            np.copyto(x_prev, x)
        np.subtract(lam_bar, u, out=drift)
        drift *= dt
        x += drift
        np.clip(x, 0.0, upper, out=x)
        step += 1
        if checking and float(np.max(np.abs(x - x_prev))) < stall_tol:
            stalled = True
            break
        if step % record_stride == 0:
            times.append(step * dt)
            profiles.append(x.copy())

    if times[-1] != step * dt:
        times.append(step * dt)
        profiles.append(x.copy())
    if not (converged or stalled):
        u = evaluate(x)
        if not np.all(np.isfinite(u)):
            raise FloatingPointError("reward evaluation produced non-finite values")
        residual = float(np.max(np.abs(lam_bar - u)))
        converged = tol > 0 and residual < tol
    boundary_pinned = stalled and bool(np.any(x >= upper))
    return OdeTrajectory(
        times=np.asarray(times),
        profiles=np.vstack(profiles),
        terminal=x.copy(),
        converged=converged,
        boundary_pinned=boundary_pinned,
        residual_inf=residual,
        steps=step,
    )


def minimal_equilibrium(
    field: RewardField,
    games,
    lambda_bar,
    dt: float = DEFAULT_DT,
    max_time: float = DEFAULT_MAX_TIME,
    tol: float = DEFAULT_TOL,
    fd_step: float = 1e-6,
) -> EquilibriumReport:
    """Equilibrium reached from the zero profile (the monotone route).

    Non-convergence within max_time is reported, not guessed: a stalled
    boundary-pinned trajectory means no interior equilibrium is reachable
    from zero (the target is infeasible there), anything else is
    inconclusive.
    """
    x0 = np.zeros(field.n_players)
    traj = integrate_ode(field, games, x0, lambda_bar, dt=dt, max_time=max_time, tol=tol)
    x_hat = traj.terminal
    margin = INTERIOR_MARGIN_FRAC * field.bounds.upper
    interior = bool(np.all(x_hat > 0) and np.all(x_hat < field.bounds.upper - margin))
    if traj.converged:
        spectrum = (
            jacobian_spectrum(field, games, x_hat, fd_step=fd_step) if interior else None
        )
        return EquilibriumReport(
            status="converged",
            equilibrium=x_hat,
            residual_inf=traj.residual_inf,
            interior=interior,
            minimal=True,
            spectrum=spectrum,
        )
    status = "boundary_pinned" if traj.boundary_pinned else "inconclusive"
    return EquilibriumReport(
        status=status,
        equilibrium=x_hat,
        residual_inf=traj.residual_inf,
        interior=interior,
        minimal=False,
        spectrum=None,
    )


def power_control_equilibrium_linear(
    instance: PowerControlInstance, games, lambda_bar
) -> EquilibriumReport:
    """Exact power-control equilibrium by per-game linear solve.

    Setting the SINR of every player to its target linearizes to
    (diag(c_nn) - diag(lam_bar) C_off^T) x = N0 * lam_bar within each game
    block.  The solution is flagged infeasible when any component falls
    outside [0, B_n].  A singular block raises numpy.linalg.LinAlgError.
    """
    g = game_assignment(games, instance.n_games)
    lam_bar = np.ascontiguousarray(lambda_bar, dtype=float)
    n = instance.n_players
    if g.shape[0] != n or lam_bar.shape[0] != n:
        raise ValueError(f"instance expects {n} players")
    x_hat = np.zeros(n)
    for game in np.unique(g):
        idx = np.flatnonzero(g == game)
        block = instance.gains[np.ix_(idx, idx)]
        lam_block = lam_bar[idx]
        system = np.diag(np.diag(block)) - lam_block[:, None] * block.T
        system[np.diag_indices(idx.size)] = np.diag(block)
        x_hat[idx] = np.linalg.solve(system, instance.noise_floor * lam_block)

    upper = instance.bounds.upper
    feasible = bool(np.all(x_hat >= 0) and np.all(x_hat <= upper))
    margin = INTERIOR_MARGIN_FRAC * upper
    interior = bool(np.all(x_hat > 0) and np.all(x_hat < upper - margin))
    if feasible:
        residual = float(
            np.max(np.abs(lam_bar - instance.evaluate(g, np.minimum(x_hat, upper))))
        )
    else:
        residual = np.inf
    spectrum = (
        jacobian_spectrum(instance, g, x_hat) if feasible and interior else None
    )
    return EquilibriumReport(
        status="converged" if feasible else "infeasible",
        equilibrium=x_hat,
        residual_inf=residual,
        interior=interior,
        minimal=feasible,
        spectrum=spectrum,
    )


def check_feasibility(
    field: RewardField,
    games,
    lambda_bar,
    dt: float = DEFAULT_DT,
    max_time: float = DEFAULT_MAX_TIME,
    tol: float = DEFAULT_TOL,
) -> FeasibilityResult:
    """Can every player meet its target strictly inside the action box?

    Power control delegates to the exact linear solve; other fields are
    declared feasible iff the from-zero integration converges to an interior
    equilibrium.
    """
    if type(field) is PowerControlInstance:
        report = power_control_equilibrium_linear(field, games, lambda_bar)
        if report.status == "converged" and report.interior:
            return FeasibilityResult("feasible", report.equilibrium, report)
        return FeasibilityResult("infeasible", None, report)
    report = minimal_equilibrium(field, games, lambda_bar, dt=dt, max_time=max_time, tol=tol)
    if report.status == "converged" and report.interior:
        return FeasibilityResult("feasible", report.equilibrium, report)
    if report.status == "boundary_pinned":
        return FeasibilityResult("infeasible", None, report)
    return FeasibilityResult("unknown", None, report)


def jacobian_spectrum(
    field: RewardField,
    games,
    x_hat,
    fd_step: float = 1e-6,
    hyperbolicity_tol: float = 1e-8,
) -> SpectrumSummary:
    """Eigenvalues of the finite-difference reward Jacobian per game block.

    Requires a strictly interior profile.  Eigenvalues with |Re| below
    `hyperbolicity_tol` are reported as warnings: the matching equilibrium of
    the dynamics is then not clearly hyperbolic.
    """
    g = game_assignment(games, field.n_games)
    x = action_profile(x_hat)
    upper = field.bounds.upper
    if np.any(x <= 0) or np.any(x >= upper):
        raise ValueError("jacobian_spectrum needs a strictly interior profile")
    n = field.n_players
    jac = np.zeros((n, n))
    for m in range(n):
        bump = np.zeros(n)
        bump[m] = fd_step
        u_plus = field.evaluate(g, np.minimum(upper, x + bump))
        u_minus = field.evaluate(g, np.maximum(0.0, x - bump))
        jac[:, m] = (u_plus - u_minus) / (2.0 * fd_step)

    eigenvalues = {}
    warnings = []
    min_abs_real = np.inf
    max_real = -np.inf
    for game in np.unique(g):
        idx = np.flatnonzero(g == game)
        eig = np.linalg.eigvals(jac[np.ix_(idx, idx)])
        eigenvalues[int(game)] = eig
        for value in eig:
            min_abs_real = min(min_abs_real, abs(value.real))
            max_real = max(max_real, value.real)
            if abs(value.real) < hyperbolicity_tol:
                warnings.append((int(game), complex(value)))
    return SpectrumSummary(
        eigenvalues=eigenvalues,
        max_real=float(max_real),
        min_abs_real=float(min_abs_real),
        hyperbolic=not warnings,
        warnings=warnings,
    )
