"""Acceptance suite: one test per criterion, at the declared tolerances.

Each test prints a PASS line with its measured margins; together they gate
the release.  Heavy runs are shared through module-scoped fixtures.
"""

import itertools
import json
import time

import numpy as np
import pytest

from tugofpeace.cli import main as cli_main
from tugofpeace.core import QoSTargets, sample_targets
from tugofpeace.harness import parse_config, run_experiment
from tugofpeace.learner import NoiseModel, StepsizeSchedule, run_simulation
from tugofpeace.oracle import integrate_ode, power_control_equilibrium_linear
from tugofpeace.scenarios import (
    PowerControlInstance,
    gen_power_control,
    gen_sensor_network,
    instance_from_config,
    instance_to_config,
    sensor_delivery_probability_exact,
)

pytestmark = pytest.mark.acceptance


def _assignment_feasible(instance, assignment, lam_bar):
    report = power_control_equilibrium_linear(instance, assignment, lam_bar)
    return report.status == "converged" and report.interior


def _warm():
    inst = PowerControlInstance(gains=np.array([[1.0]]), noise_floor=0.1)
    run_simulation("ToP", inst, QoSTargets(np.array([0.1])), StepsizeSchedule(),
                   NoiseModel("none"), 1, seed=0)


@pytest.fixture(scope="module", autouse=True)
def warm_kernel():
    _warm()


def test_criterion_01_linear_and_ode_oracles_agree():
    """50 seeded N=10 instances: linear solve vs from-zero integration."""
    started = time.perf_counter()
    worst = 0.0
    ones = np.ones(10, dtype=np.int64)
    for k in range(50):
        streams = np.random.SeedSequence(100 + k).spawn(2)
        instance = gen_power_control(10, np.random.default_rng(streams[0]))
        lam_bar = np.random.default_rng(streams[1]).uniform(0.05, 0.15, 10)
        linear = power_control_equilibrium_linear(instance, ones, lam_bar)
        assert linear.status == "converged", f"instance {k} infeasible"
        trajectory = integrate_ode(instance, ones, np.zeros(10), lam_bar)
        assert trajectory.converged
        worst = max(worst, float(np.max(np.abs(trajectory.terminal - linear.equilibrium))))
    elapsed = time.perf_counter() - started
    assert worst < 1e-6
    assert elapsed < 10.0
    print(f"\nACCEPTANCE 1 PASS: oracle agreement {worst:.2e} < 1e-6 on 50 instances, {elapsed:.1f}s < 10s")


def test_criterion_02_noiseless_top_reproduces_oracle():
    """Noiseless ToP terminal within 1e-3 of the linear equilibrium, 100/100."""
    config = parse_config(json.dumps({
        "scenario": {"kind": "power_control", "n_players": 10, "require_feasible": True},
        "algorithm": "ToP",
        "noise": {"kind": "none"},
        "targets": {"lambda": 0.05, "delta": 0.1},
        "schedule": {"scale": 1.0, "offset": 100.0, "exponent": 1.0},
        "horizon": 100_000,
        "realizations": 100,
        "base_seed": 200,
        "record_stride": 100_000,
    }))
    result = run_experiment(config, threads=4)
    worst = 0.0
    passed = 0
    for summary in result.summaries:
        instance = instance_from_config(summary.instance)
        oracle = power_control_equilibrium_linear(
            instance, np.ones(10, dtype=np.int64), summary.lambda_bar
        )
        err = float(np.max(np.abs(summary.final_actions - oracle.equilibrium)))
        worst = max(worst, err)
        passed += err < 1e-3
    assert passed == 100
    print(f"\nACCEPTANCE 2 PASS: {passed}/100 seeds, worst terminal error {worst:.2e} < 1e-3")


@pytest.fixture(scope="module")
def four_player_tracking():
    config = parse_config(json.dumps({
        "scenario": {"kind": "power_control", "n_players": 4, "require_feasible": True},
        "algorithm": "ToP",
        "noise": {"kind": "truncated-gaussian", "sigma": 0.1, "clip": 0.4},
        "targets": {"lambda": [0.8, 1.2, 1.0, 0.9], "delta": 0.01},
        "schedule": {"scale": 1.0, "offset": 10.0, "exponent": 0.9},
        "horizon": 200_000,
        "realizations": 100,
        "base_seed": 300,
        "record_stride": 20_000,
    }))
    started = time.perf_counter()
    result = run_experiment(config, threads=4)
    return config, result, time.perf_counter() - started


def test_criterion_03_four_player_rewards_track_targets(four_player_tracking):
    """Per-player tail rewards within 0.05 of lambda_bar in >= 95/100 runs."""
    _, result, elapsed = four_player_tracking
    deviations = [
        float(np.max(np.abs(s.tail_rewards - s.lambda_bar))) for s in result.summaries
    ]
    passed = sum(d <= 0.05 for d in deviations)
    assert passed >= 95
    assert elapsed < 120.0
    print(f"\nACCEPTANCE 3 PASS: {passed}/100 realizations within 0.05 "
          f"(worst {max(deviations):.3f}), {elapsed:.1f}s < 120s")


def test_criterion_06_resets_stop_in_first_half(four_player_tracking):
    """No reset in the final 50% of the horizon in >= 95/100 of criterion 3's runs."""
    config, result, _ = four_player_tracking
    half = config.horizon // 2
    quiet = sum(s.events.last_reset < half for s in result.summaries)
    total_resets = sum(s.events.resets for s in result.summaries)
    assert quiet >= 95
    print(f"\nACCEPTANCE 6 PASS: {quiet}/100 realizations reset-free after round {half} "
          f"({total_resets} resets total)")


def test_criterion_04_min_player_reward_with_fifty_players():
    """Tail-averaged per-round minimum reward >= 0.08 in >= 95/100 runs."""
    config = parse_config(json.dumps({
        "scenario": {"kind": "power_control", "n_players": 50, "require_feasible": True},
        "algorithm": "ToP",
        "noise": {"kind": "gaussian", "sigma": 0.1},
        "targets": {"lambda": 0.1, "delta": 0.01},
        "schedule": {"scale": 1.0, "offset": 100.0, "exponent": 1.0},
        "horizon": 200_000,
        "realizations": 100,
        "base_seed": 400,
        "record_stride": 20_000,
    }))
    result = run_experiment(config, threads=4)
    tail_minima = [s.tail_min_reward for s in result.summaries]
    resampled = sum(s.resampled_instances for s in result.summaries)
    passed = sum(m >= 0.1 - 0.02 for m in tail_minima)
    assert passed >= 95
    print(f"\nACCEPTANCE 4 PASS: {passed}/100 realizations with tail min reward >= 0.08 "
          f"(worst {min(tail_minima):.3f}; {resampled} infeasible draws resampled)")


def test_criterion_05_fdtop_finds_minimal_equilibrium():
    """FDToP with small steps lands within 0.01 of x_* on the symmetric pair."""
    instance = PowerControlInstance(
        gains=np.array([[1.0, 0.2], [0.2, 1.0]]), noise_floor=0.1
    )
    x_star = 0.05 / 0.9
    config = parse_config(json.dumps({
        "scenario": {"kind": "power_control", "instance": instance_to_config(instance)},
        "algorithm": "FDToP",
        "noise": {"kind": "gaussian", "sigma": 0.05},
        "targets": {"lambda": 0.5, "delta": 1e-12},
        "schedule": {"scale": 1.0, "offset": 1000.0, "exponent": 1.0},
        "horizon": 100_000,
        "realizations": 100,
        "base_seed": 500,
        "record_stride": 10_000,
    }))
    result = run_experiment(config, threads=4)
    errors = [float(np.max(np.abs(s.tail_actions - x_star))) for s in result.summaries]
    passed = sum(e <= 0.01 for e in errors)
    assert passed >= 95
    print(f"\nACCEPTANCE 5 PASS: {passed}/100 seeds within 0.01 of x_* "
          f"(worst {max(errors):.4f})")


@pytest.fixture(scope="module")
def meta_instance():
    """Two-channel 10-player instance where both mono-game configurations are
    infeasible but every split with at most 7 players per game is feasible,
    verified by the linear oracle over all 2^10 assignments."""
    lam_bar = np.full(10, 0.6)
    rng = np.random.default_rng(np.random.SeedSequence(777).spawn(4)[0])
    instance = None
    for _ in range(20_000):
        candidate = gen_power_control(10, rng, n_games=2)
        if _assignment_feasible(candidate, np.ones(10, dtype=np.int64), lam_bar):
            continue
        sides = (
            np.ones(10, dtype=np.int64) + np.array([(i >> p) & 1 for p in range(10)])
            for i in range(1 << 10)
        )
        ok = True
        feasible_count = 0
        for assignment in sides:
            counts = np.bincount(assignment, minlength=3)
            feasible = _assignment_feasible(candidate, assignment, lam_bar)
            feasible_count += feasible
            if max(counts[1], counts[2]) == 10 and feasible:
                ok = False
                break
            if max(counts[1], counts[2]) <= 7 and not feasible:
                ok = False
                break
        if ok:
            instance = candidate
            break
    assert instance is not None, "no admissible meta instance found"
    return instance, lam_bar, feasible_count


def test_criterion_07_meta_top_converges_with_finite_switching(meta_instance):
    """Meta-ToP reaches all targets and stops switching in the first half."""
    instance, lam_bar, feasible_count = meta_instance
    config = parse_config(json.dumps({
        "scenario": {"kind": "power_control", "instance": instance_to_config(instance)},
        "algorithm": "MetaToP",
        "noise": {"kind": "gaussian", "sigma": 0.1},
        "targets": {"lambda": 0.6, "delta": 0.01},
        "schedule": {"scale": 1.0, "offset": 100.0, "exponent": 1.0},
        "switching": {"rho": 0.2, "phi": 0.1},
        "horizon": 500_000,
        "realizations": 100,
        "base_seed": 700,
        "record_stride": 50_000,
    }))
    started = time.perf_counter()
    result = run_experiment(config, threads=4)
    elapsed = time.perf_counter() - started
    reward_ok = sum(
        bool(np.all(s.tail_rewards >= np.asarray(config.lam) - 0.02))
        for s in result.summaries
    )
    quiet_ok = sum(s.events.last_switch < config.horizon // 2 for s in result.summaries)
    assert reward_ok >= 90
    assert quiet_ok >= 90
    assert elapsed < 300.0
    print(f"\nACCEPTANCE 7 PASS: rewards {reward_ok}/100, switching quiet {quiet_ok}/100, "
          f"{elapsed:.1f}s < 300s ({feasible_count}/1024 assignments feasible)")


def test_criterion_08_sensor_feedback_is_unbiased():
    """Mean empirical delivery rate within 4 sigma of the exact probability."""
    instance = gen_sensor_network(10, 0.2, np.random.default_rng(801))
    rng = np.random.default_rng(802)
    draws = 100_000
    packets = instance.packets_per_round
    worst_sigma = 0.0
    for _ in range(20):
        profile = rng.uniform(0.0, 1.0, 10)
        exact = sensor_delivery_probability_exact(instance, profile)
        successes = rng.binomial(packets, exact, size=(draws, 10))
        mean_rate = successes.mean(axis=0) / packets
        bound = 4.0 * np.sqrt(exact * (1.0 - exact) / (packets * draws))
        gap = np.abs(mean_rate - exact)
        assert np.all(gap <= bound + 1e-15)
        with np.errstate(invalid="ignore"):
            sigmas = np.where(bound > 0, 4.0 * gap / bound, 0.0)
        worst_sigma = max(worst_sigma, float(np.max(sigmas)))
    print(f"\nACCEPTANCE 8 PASS: 20 profiles x {draws} draws, worst deviation "
          f"{worst_sigma:.2f} sigma <= 4 sigma")


def test_criterion_09_tow_condition_sweep_all_families(tmp_path):
    """The validate verb finds no violations for any scenario family."""
    sensor_instance = gen_sensor_network(10, 0.2, np.random.default_rng(1))
    configs = {
        "power_control": {
            "scenario": {"kind": "power_control", "n_players": 8, "n_games": 2},
            "algorithm": "MetaToP",
            "base_seed": 901,
        },
        "task_allocation": {
            "scenario": {"kind": "task_allocation", "n_players": 8, "n_games": 2},
            "algorithm": "MetaToP",
            "base_seed": 902,
        },
        "sensor_network": {
            "scenario": {"kind": "sensor_network", "instance": instance_to_config(sensor_instance)},
            "base_seed": 903,
        },
    }
    for family, raw in configs.items():
        path = tmp_path / f"{family}.json"
        path.write_text(json.dumps(raw))
        out = tmp_path / family
        code = cli_main(["validate", "--config", str(path), "--out", str(out)])
        assert code == 0, f"{family} sweep failed"
        report = json.loads((out / "validate_report.json").read_text())
        assert report["ok"]
        assert report["points"] == 100
        assert report["same_game_violations"] == []
        assert report["cross_game_violations"] == []
    print("\nACCEPTANCE 9 PASS: zero violations over 100 interior points per family")


def test_criterion_10_ordered_starts_stay_ordered():
    """Trajectories from componentwise-ordered starts never cross (<= 1e-12)."""
    ones = np.ones(10, dtype=np.int64)
    checked = 0
    attempts = 0
    rng = np.random.default_rng(1000)
    while checked < 20:
        attempts += 1
        instance = gen_power_control(10, rng)
        lam_bar = rng.uniform(0.05, 0.15, 10)
        if not _assignment_feasible(instance, ones, lam_bar):
            continue
        upper_start = rng.uniform(0.0, 0.5, 10)
        low = integrate_ode(instance, ones, np.zeros(10), lam_bar,
                            tol=0.0, max_time=5.0, record_stride=1)
        high = integrate_ode(instance, ones, upper_start, lam_bar,
                             tol=0.0, max_time=5.0, record_stride=1)
        assert low.times.shape == high.times.shape
        assert np.all(low.profiles <= high.profiles + 1e-12)
        checked += 1
    print(f"\nACCEPTANCE 10 PASS: 20 feasible instances ({attempts} sampled), "
          f"ordering held at all {low.times.size} grid points")


def test_criterion_11_reruns_are_byte_identical(tmp_path):
    """Same config and seed give byte-identical CSV output."""
    raw = {
        "scenario": {"kind": "power_control", "n_players": 4, "require_feasible": True},
        "algorithm": "ToP",
        "noise": {"kind": "truncated-gaussian", "sigma": 0.1, "clip": 0.4},
        "targets": {"lambda": [0.8, 1.2, 1.0, 0.9], "delta": 0.01},
        "schedule": {"scale": 1.0, "offset": 10.0, "exponent": 0.9},
        "horizon": 5000,
        "realizations": 5,
        "base_seed": 1100,
        "record_stride": 100,
        "output": {"write_traces": True, "metrics": ["min_reward", "total_action"]},
    }
    meta_raw = {
        "scenario": {"kind": "power_control", "n_players": 6, "n_games": 2},
        "algorithm": "MetaToP",
        "targets": {"lambda": 0.6},
        "horizon": 5000,
        "realizations": 5,
        "base_seed": 1101,
        "record_stride": 100,
        "output": {"write_traces": True},
    }
    for tag, payload in (("single", raw), ("meta", meta_raw)):
        path = tmp_path / f"{tag}.json"
        path.write_text(json.dumps(payload))
        outs = []
        for attempt in range(2):
            out = tmp_path / f"{tag}_{attempt}"
            threads = 1 if attempt == 0 else 3
            assert cli_main(["run", "--config", str(path), "--out", str(out),
                             "--threads", str(threads)]) == 0
            outs.append(out)
        for name in ("aggregate.csv", "traces.csv", "summary.json"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), (
                f"{tag}/{name} differs between reruns"
            )
    print("\nACCEPTANCE 11 PASS: reruns byte-identical across thread counts")
