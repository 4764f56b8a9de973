"""Numba inner loops for long-horizon simulations.

The round semantics here mirror learner._round_core exactly; the kernels
exist only to make 10^5..10^6-round runs cheap.  Noise is pre-drawn outside
(one batch per realization, same stream as per-round draws), and game-switch
randomness is consumed from a pre-drawn uniform pool with a fixed protocol:
one uniform per player per broadcast round, plus one more to pick the
destination game when the player switches.  If a run exhausts the pool it
flags `events[5]` and the caller retries with a larger pool drawn from the
same stream, which replays the identical prefix.
"""

import numpy as np
from numba import njit

ALGO_TOP = 0
ALGO_FDTOP = 1
ALGO_METATOP = 2

SCEN_POWER = 0
SCEN_TASK = 1


@njit(cache=True, nogil=True)
def _rewards(scenario, gains, noise_floor, alpha, beta, games, x, out):
    n = x.shape[0]
    if scenario == SCEN_POWER:
        for i in range(n):
            interference = 0.0
            for m in range(n):
                if m != i and games[m] == games[i]:
                    interference += gains[m, i] * x[m]
            out[i] = gains[i, i] * x[i] / (noise_floor + interference)
    else:
        totals = np.zeros(alpha.shape[0])
        for i in range(n):
            totals[games[i] - 1] += beta[i, games[i] - 1] * x[i]
        for i in range(n):
            gi = games[i] - 1
            s = totals[gi]
            if s > 0.0:
                out[i] = beta[i, gi] * x[i] / s * np.log(alpha[gi] + s)
            else:
                out[i] = 0.0


@njit(cache=True, nogil=True)
def simulate(
    scenario,
    gains,
    noise_floor,
    alpha,
    beta,
    algorithm,
    lam_bar,
    upper,
    games0,
    eta,
    noise,
    has_noise,
    pool,
    pool_start,
    rho,
    phi,
    n_games,
    rec_rounds,
    rec_actions,
    rec_games,
    rec_true,
    rec_obs,
    rec_reset,
    rec_switch,
    tail_start,
    tail_sums,
    tail_extra,
    final_x,
    final_g,
    events,
):
    n = lam_bar.shape[0]
    horizon = eta.shape[0]
    x = np.zeros(n)
    games = games0.copy()
    u = np.empty(n)
    y = np.empty(n)
    hit = np.zeros(n, dtype=np.bool_)
    switched = np.zeros(n, dtype=np.bool_)
    game_hit = np.zeros(n_games + 1, dtype=np.bool_)
    pool_ptr = pool_start
    rec_ptr = 0
    n_rec = rec_rounds.shape[0]
    n_resets = 0
    n_switches = 0
    last_reset = -1
    last_switch = -1

    for t in range(horizon):
        _rewards(scenario, gains, noise_floor, alpha, beta, games, x, u)
        if has_noise:
            for i in range(n):
                y[i] = u[i] + noise[t, i]
        else:
            for i in range(n):
                y[i] = u[i]

        recording = rec_ptr < n_rec and rec_rounds[rec_ptr] == t
        if recording:
            for i in range(n):
                rec_actions[rec_ptr, i] = x[i]
                rec_games[rec_ptr, i] = games[i]
                rec_true[rec_ptr, i] = u[i]
                rec_obs[rec_ptr, i] = y[i]
        if t >= tail_start:
            round_min = u[0]
            for i in range(n):
                tail_sums[0, i] += x[i]
                tail_sums[1, i] += u[i]
                tail_sums[2, i] += y[i]
                if u[i] < round_min:
                    round_min = u[i]
            tail_extra[0] += round_min

        hit_any = False
        for i in range(n):
            xi = x[i] + eta[t] * (lam_bar[i] - y[i])
            if xi < 0.0:
                xi = 0.0
            if xi >= upper[i]:
                xi = upper[i]
                hit[i] = True
                hit_any = True
            else:
                hit[i] = False
            x[i] = xi

        reset_flag = False
        for i in range(n):
            switched[i] = False
        if hit_any and algorithm == ALGO_TOP:
            reset_flag = True
            for i in range(n):
                x[i] = 0.0
            n_resets += 1
            last_reset = t
        elif hit_any and algorithm == ALGO_METATOP:
            reset_flag = True
            for gix in range(n_games + 1):
                game_hit[gix] = False
            for i in range(n):
                if hit[i]:
                    game_hit[games[i]] = True
            for i in range(n):
                x[i] = 0.0
            n_resets += 1
            last_reset = t
            if pool_ptr + 2 * n > pool.shape[0]:
                events[5] = 1
                return
            for i in range(n):
                prob = rho if game_hit[games[i]] else phi
                u1 = pool[pool_ptr]
                pool_ptr += 1
                if u1 < prob:
                    u2 = pool[pool_ptr]
                    pool_ptr += 1
                    dest = 1 + int(u2 * (n_games - 1))
                    if dest >= games[i]:
                        dest += 1
                    games[i] = dest
                    switched[i] = True
                    n_switches += 1
                    last_switch = t

        if recording:
            rec_reset[rec_ptr] = reset_flag
            for i in range(n):
                rec_switch[rec_ptr, i] = switched[i]
            rec_ptr += 1

    for i in range(n):
        final_x[i] = x[i]
        final_g[i] = games[i]
    events[0] = n_resets
    events[1] = n_switches
    events[2] = last_reset
    events[3] = last_switch
    events[4] = pool_ptr
    events[5] = 0
