import math
import random

import numpy as np
import pytest

from codesleep.agent import Action, EpsilonSchedule
from codesleep.baselines import (
    ALWAYS_OVERHEAR,
    ALWAYS_SLEEP,
    FixedPolicy,
    SyntheticSmdp,
    apply_fixed_policy,
    canonical_scenario,
    greedy_delays,
    greedy_policy,
    random_policy,
    steady_canonical,
    train_on_smdp,
    value_iteration,
)
from codesleep.world import build_topology


def single_state_smdp(reward=1.0, sojourn=1.0):
    return SyntheticSmdp(
        transitions=np.ones((1, 1, 1)),
        rewards=np.array([[reward]]),
        sojourns=np.array([[sojourn]]),
    )


def test_value_iteration_geometric_series():
    q, policy = value_iteration(single_state_smdp(), 0.9, 1e-12)
    assert q[0, 0] == pytest.approx(1.0 / (1.0 - math.exp(-0.9)), abs=1e-3)
    assert policy == [0]


def test_value_iteration_picks_better_action():
    m = SyntheticSmdp(
        transitions=np.ones((1, 2, 1)),
        rewards=np.array([[1.0, 2.0]]),
        sojourns=np.array([[1.0, 1.0]]),
    )
    _, policy = value_iteration(m, 0.9, 1e-10)
    assert policy == [1]


def test_value_iteration_is_a_contraction():
    rng = np.random.default_rng(5)
    P = rng.random((3, 2, 3))
    P /= P.sum(axis=2, keepdims=True)
    m = SyntheticSmdp(P, rng.random((3, 2)), 0.5 + rng.random((3, 2)))
    q_star, _ = value_iteration(m, 0.9, 1e-12)
    disc = np.exp(-0.9 * m.sojourns)
    q = np.zeros((3, 2))
    errors = []
    for _ in range(30):
        q = m.rewards + disc * np.einsum("sat,t->sa", m.transitions, q.max(axis=1))
        errors.append(np.abs(q - q_star).max())
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))


def test_value_iteration_matches_monte_carlo():
    rng = np.random.default_rng(11)
    P = rng.random((3, 2, 3))
    P /= P.sum(axis=2, keepdims=True)
    m = SyntheticSmdp(P, rng.random((3, 2)) * 2, 0.5 + rng.random((3, 2)))
    q_star, policy = value_iteration(m, 0.9, 1e-12)

    py_rng = random.Random(17)
    states = list(range(3))

    def rollout(s0, a0, depth=45):
        total = 0.0
        factor = 1.0
        s, a = s0, a0
        for _ in range(depth):
            total += factor * m.rewards[s, a]
            factor *= math.exp(-0.9 * m.sojourns[s, a])
            s = py_rng.choices(states, weights=m.transitions[s, a])[0]
            a = policy[s]
        return total

    for s in range(3):
        for a in range(2):
            est = sum(rollout(s, a) for _ in range(3000)) / 3000
            assert abs(est - q_star[s, a]) / abs(q_star[s, a]) < 0.02


def test_value_iteration_input_guards():
    with pytest.raises(ValueError):
        value_iteration(single_state_smdp(), 0.0, 1e-6)
    with pytest.raises(ValueError):
        value_iteration(single_state_smdp(), 0.9, 0.0)
    with pytest.raises(ValueError):
        SyntheticSmdp(np.full((1, 1, 1), 0.7), np.ones((1, 1)), np.ones((1, 1)))
    with pytest.raises(ValueError):
        SyntheticSmdp(np.ones((1, 1, 1)), np.ones((1, 1)), np.zeros((1, 1)))


def test_fixed_policies():
    rng = random.Random(0)
    assert all(apply_fixed_policy(ALWAYS_OVERHEAR, rng) == Action.OVERHEAR
               for _ in range(20))
    assert all(apply_fixed_policy(ALWAYS_SLEEP, rng) == Action.SLEEP
               for _ in range(20))
    with pytest.raises(ValueError):
        FixedPolicy("sometimes")
    with pytest.raises(ValueError):
        random_policy(1.5)


def test_random_policy_statistics():
    rng = random.Random(2024)
    policy = random_policy(0.5)
    picks = [apply_fixed_policy(policy, rng) for _ in range(10_000)]
    frac = sum(1 for a in picks if a == Action.OVERHEAR) / len(picks)
    assert abs(frac - 0.5) < 0.03


def test_canonical_scenario_geometry():
    for name in ("chain-fig1", "two-way-relay", "bystander-cross"):
        cfg = canonical_scenario(name)
        topo = build_topology(cfg.positions, cfg.radius)
        if name == "two-way-relay":
            assert topo.neighbors[2] == {0, 1}
            assert 1 not in topo.neighbors[0]
        else:
            # links: n1-R, n2-R, n3-R, n1-n3 and nothing else among them
            assert topo.neighbors[3] >= {0, 1, 2}
            assert 2 in topo.neighbors[0]
            assert 1 not in topo.neighbors[0]
            assert 2 not in topo.neighbors[1]
        if name == "bystander-cross":
            assert topo.neighbors[4] == {0}


def test_canonical_unknown_name():
    with pytest.raises(ValueError):
        canonical_scenario("ring-fig9")


def test_steady_canonical_flows():
    cfg = steady_canonical("chain-fig1", mean_interarrival=8.0, duration=5000)
    assert cfg.duration_slots == 5000
    assert all(f.mean_interarrival == 8.0 and f.arrivals is None for f in cfg.flows)


def delay_probe_smdp(delay):
    """4-state, 2-action instance with uniform-high greedy rewards.

    Greedy rewards are identical across states so misattributed slices
    blend to a strictly lower value, and good actions get the shorter
    sojourn in every state so continuation never favors the bad action.
    """
    R = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    F = np.array([[0.9, 1.2], [1.3, 1.0], [0.8, 1.1], [1.2, 0.9]])
    P = np.zeros((4, 2, 4))
    for s in range(4):
        for a in range(2):
            P[s, a, (s + 1 + a) % 4] = 0.5
            P[s, a, (s + 2 + a) % 4] = 0.3
            P[s, a, (s + 3 + a) % 4] = 0.2
    return SyntheticSmdp(P, R, F, reward_delay_epochs=delay)


def test_learner_matches_oracle_smoke():
    m = delay_probe_smdp(2)
    _, pi = value_iteration(m, 0.9, 1e-10)
    agent = train_on_smdp(m, epochs=30_000, seed=1, learning_rate=0.02,
                          schedule=EpsilonSchedule(0.3, 0.1, 4000))
    assert greedy_policy(agent.table) == pi
    assert greedy_delays(agent.table) == [2, 2, 2, 2]


def test_poisson_delay_mode_runs():
    m = delay_probe_smdp(0)
    m.poisson_delay_mean = 1.5
    agent = train_on_smdp(m, epochs=2000, seed=3)
    assert agent.epoch == 2000
