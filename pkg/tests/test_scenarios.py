"""Tests for the three reward families, their generators and serialization."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tugofpeace.core import Bounds
from tugofpeace.scenarios import (
    PowerControlInstance,
    SensorNetworkInstance,
    TaskAllocationInstance,
    gen_power_control,
    gen_sensor_network,
    gen_task_allocation,
    instance_fingerprint,
    instance_from_config,
    instance_to_config,
    power_control_reward,
    sensor_delivery_probability_exact,
    sensor_feedback_sample,
    sensor_reward,
    task_allocation_reward,
)


@pytest.fixture
def two_player_power():
    return PowerControlInstance(
        gains=np.array([[1.0, 0.1], [0.1, 1.0]]), noise_floor=0.1, n_games=2
    )


class TestPowerControlReward:
    def test_same_game_hand_values(self, two_player_power):
        u = power_control_reward(two_player_power, [1, 1], [0.1, 0.2])
        assert u[0] == pytest.approx(0.1 / 0.12)
        assert u[1] == pytest.approx(0.2 / 0.11)

    def test_different_games_no_interference(self, two_player_power):
        u = power_control_reward(two_player_power, [1, 2], [0.1, 0.2])
        assert u == pytest.approx([1.0, 2.0])

    def test_zero_action(self, two_player_power):
        u = power_control_reward(two_player_power, [1, 1], [0.0, 0.2])
        assert u[0] == 0.0

    def test_dimension_mismatch(self, two_player_power):
        with pytest.raises(ValueError):
            power_control_reward(two_player_power, [1, 1, 1], [0.1, 0.2, 0.3])

    def test_gains_must_be_positive(self):
        with pytest.raises(ValueError):
            PowerControlInstance(gains=np.array([[1.0, 0.0], [0.1, 1.0]]))


class TestTaskAllocationReward:
    def test_equal_split_of_log_utility(self):
        inst = TaskAllocationInstance(alpha=np.array([1.0]), beta=np.ones((2, 1)))
        u = task_allocation_reward(inst, [1, 1], [1.0, 1.0])
        assert u == pytest.approx([np.log(3.0) / 2] * 2)

    def test_single_agent_closed_form(self):
        inst = TaskAllocationInstance(alpha=np.array([1.0]), beta=np.ones((1, 1)))
        u = task_allocation_reward(inst, [1], [np.e - 1.0])
        assert u[0] == pytest.approx(1.0)

    def test_zero_action_gets_zero_share(self):
        inst = TaskAllocationInstance(alpha=np.array([2.0]), beta=np.ones((2, 1)))
        u = task_allocation_reward(inst, [1, 1], [0.0, 3.0])
        assert u[0] == 0.0
        assert u[1] == pytest.approx(np.log(5.0))

    def test_all_zero_actions_define_zero_reward(self):
        inst = gen_task_allocation(3, 2, np.random.default_rng(0))
        u = task_allocation_reward(inst, [1, 2, 1], [0.0, 0.0, 0.0])
        assert np.array_equal(u, np.zeros(3))

    def test_alpha_below_one_rejected(self):
        with pytest.raises(ValueError):
            TaskAllocationInstance(alpha=np.array([0.9]), beta=np.ones((1, 1)))


def line_sensor():
    # 1 -- 2 -- sink: only the second sensor can reach the sink directly
    return SensorNetworkInstance(
        adjacency=np.array([[0, 1], [1, 0]], dtype=bool),
        sink_links=np.array([False, True]),
    )


def brute_force_delivery(instance, actions):
    """Independent oracle: plain itertools enumeration with set-based BFS."""
    n = instance.n_players
    probs = np.zeros(n)
    for state in itertools.product([0, 1], repeat=n):
        weight = 1.0
        for m in range(n):
            weight *= (1.0 - actions[m]) if state[m] else actions[m]
        active = {m for m in range(n) if state[m]}
        reached = {m for m in active if instance.sink_links[m]}
        frontier = set(reached)
        while frontier:
            grown = set()
            for i in frontier:
                for j in range(n):
                    if instance.adjacency[i, j] and j in active and j not in reached:
                        grown.add(j)
            reached |= grown
            frontier = grown
        for m in reached:
            probs[m] += weight
    return probs


class TestSensorDelivery:
    def test_line_topology_hand_values(self):
        p = sensor_delivery_probability_exact(line_sensor(), [0.5, 0.5])
        assert p == pytest.approx([0.25, 0.5])

    def test_always_off_never_delivers(self):
        p = sensor_delivery_probability_exact(line_sensor(), [1.0, 0.3])
        assert p[0] == 0.0

    def test_all_on_connected_delivers_surely(self):
        p = sensor_delivery_probability_exact(line_sensor(), [0.0, 0.0])
        assert np.array_equal(p, [1.0, 1.0])

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        inst = gen_sensor_network(5, 0.5, rng)
        x = rng.uniform(0.0, 1.0, 5)
        fast = sensor_delivery_probability_exact(inst, x)
        slow = brute_force_delivery(inst, x)
        assert fast == pytest.approx(slow, abs=1e-12)

    def test_monotone_in_every_action(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            inst = gen_sensor_network(6, 0.4, rng)
            x = rng.uniform(0.1, 0.9, 6)
            base = sensor_delivery_probability_exact(inst, x)
            for m in range(6):
                bumped = x.copy()
                bumped[m] = min(1.0, bumped[m] + 0.1)
                higher = sensor_delivery_probability_exact(inst, bumped)
                assert np.all(higher <= base + 1e-12)

    def test_enumeration_size_cap(self):
        with pytest.raises(ValueError):
            SensorNetworkInstance(
                adjacency=np.zeros((21, 21), dtype=bool),
                sink_links=np.ones(21, dtype=bool),
            )


class TestSensorReward:
    def test_hand_value(self):
        u = sensor_reward(line_sensor(), [0.5, 0.5], [0.25, 0.5])
        assert u[1] == pytest.approx(0.8 * np.sqrt(0.5) - 0.8 + 1.0)

    def test_zero_at_full_delivery_zero_action(self):
        u = sensor_reward(line_sensor(), [0.0, 0.0], [1.0, 1.0])
        assert np.array_equal(u, [0.0, 0.0])

    def test_floor_applies(self):
        u = sensor_reward(line_sensor(), [0.0, 0.0], [0.0, 0.0])
        assert np.array_equal(u, [0.0, 0.0])

    def test_rejects_bad_probabilities(self):
        with pytest.raises(ValueError):
            sensor_reward(line_sensor(), [0.5, 0.5], [1.2, 0.5])


class TestSensorFeedback:
    def test_degenerate_probability_is_exact(self):
        inst = line_sensor()
        rng = np.random.default_rng(5)
        x = np.array([1.0, 0.0])  # sensor 1 never delivers, sensor 2 always
        for _ in range(50):
            y = sensor_feedback_sample(inst, x, rng)
            assert y[0] == sensor_reward(inst, x, [0.0, 1.0])[0]
            assert y[1] == sensor_reward(inst, x, [0.0, 1.0])[1]

    def test_empirical_rate_unbiased(self):
        inst = gen_sensor_network(5, 0.5, np.random.default_rng(1))
        rng = np.random.default_rng(2)
        x = rng.uniform(0.1, 0.9, 5)
        exact = sensor_delivery_probability_exact(inst, x)
        draws = 20_000
        rates = rng.binomial(inst.packets_per_round, exact, size=(draws, 5))
        mean_rate = rates.mean(axis=0) / inst.packets_per_round
        bound = 4 * np.sqrt(exact * (1 - exact) / (inst.packets_per_round * draws))
        assert np.all(np.abs(mean_rate - exact) <= bound + 1e-12)

    def test_large_packet_count_concentrates(self):
        inst = SensorNetworkInstance(
            adjacency=line_sensor().adjacency,
            sink_links=line_sensor().sink_links,
            packets_per_round=1_000_000,
        )
        x = np.array([0.5, 0.5])
        clean = inst.evaluate(np.array([1, 1]), x)
        noisy = sensor_feedback_sample(inst, x, np.random.default_rng(0))
        assert noisy == pytest.approx(clean, abs=1e-2)


class TestGenerators:
    def test_power_control_ranges(self):
        inst = gen_power_control(8, np.random.default_rng(0))
        diag = np.diag(inst.gains)
        off = inst.gains[~np.eye(8, dtype=bool)]
        assert np.all((diag >= 0.2) & (diag <= 0.8))
        assert np.all((off > 0) & (off <= 0.2))
        assert inst.noise_floor == 0.1

    def test_power_control_single_player(self):
        inst = gen_power_control(1, np.random.default_rng(4))
        assert inst.gains.shape == (1, 1)
        assert 0.2 <= inst.gains[0, 0] <= 0.8

    def test_task_allocation_ranges(self):
        inst = gen_task_allocation(6, 3, np.random.default_rng(1))
        assert np.all((inst.alpha >= 1.1) & (inst.alpha <= 5.0))
        assert np.all((inst.beta >= 100.0) & (inst.beta <= 200.0))
        assert inst.bounds.upper[0] == 10.0

    @pytest.mark.parametrize("maker", [
        lambda rng: gen_power_control(5, rng),
        lambda rng: gen_task_allocation(5, 2, rng),
        lambda rng: gen_sensor_network(5, 0.3, rng),
    ])
    def test_seed_determinism(self, maker):
        a = maker(np.random.default_rng(33))
        b = maker(np.random.default_rng(33))
        assert instance_fingerprint(a) == instance_fingerprint(b)

    def test_sensor_edge_prob_one(self):
        inst = gen_sensor_network(4, 1.0, np.random.default_rng(0))
        assert np.all(inst.adjacency | np.eye(4, dtype=bool))
        assert np.all(inst.sink_links)
        p = sensor_delivery_probability_exact(inst, np.zeros(4))
        assert np.array_equal(p, np.ones(4))

    def test_sensor_edge_prob_zero(self):
        inst = gen_sensor_network(4, 0.0, np.random.default_rng(0))
        rng = np.random.default_rng(1)
        for _ in range(5):
            p = sensor_delivery_probability_exact(inst, rng.uniform(0, 1, 4))
            assert np.array_equal(p, np.zeros(4))


class TestCrossGameIndependence:
    @pytest.mark.parametrize("maker", [
        lambda rng: gen_power_control(6, rng, n_games=2),
        lambda rng: gen_task_allocation(6, 2, rng),
    ])
    def test_other_game_actions_do_not_matter(self, maker):
        rng = np.random.default_rng(21)
        inst = maker(rng)
        games = np.array([1, 1, 1, 2, 2, 2])
        x = rng.uniform(0.1, 0.9, 6) * inst.bounds.upper
        u = inst.evaluate(games, x)
        for _ in range(10):
            perturbed = x.copy()
            perturbed[3:] = rng.uniform(0.0, 1.0, 3) * inst.bounds.upper[3:]
            v = inst.evaluate(games, perturbed)
            assert np.array_equal(v[:3], u[:3])


class TestSerialization:
    @pytest.mark.parametrize("maker", [
        lambda rng: gen_power_control(4, rng, n_games=2, bound=2.0),
        lambda rng: gen_task_allocation(4, 3, rng),
        lambda rng: gen_sensor_network(4, 0.4, rng),
    ])
    def test_round_trip(self, maker):
        inst = maker(np.random.default_rng(17))
        clone = instance_from_config(instance_to_config(inst))
        assert instance_fingerprint(clone) == instance_fingerprint(inst)
        games = (np.arange(4) % inst.n_games) + 1
        x = np.random.default_rng(1).uniform(0.05, 0.9, 4) * inst.bounds.upper
        assert np.array_equal(clone.evaluate(games, x), inst.evaluate(games, x))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            instance_from_config({"kind": "bogus"})


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_sensor_state_weights_are_a_distribution(seed):
    rng = np.random.default_rng(seed)
    inst = gen_sensor_network(5, 0.4, rng)
    x = rng.uniform(0.0, 1.0, 5)
    weights = np.prod(np.where(inst._activation_masks, 1.0 - x, x), axis=1)
    assert weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(weights >= 0)
