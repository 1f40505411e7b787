"""Shared fixtures and scenario builders for the test suite."""

from __future__ import annotations

import math

import pytest

from codesleep.baselines import canonical_scenario
from codesleep.config import ScenarioConfig
from codesleep.world import Flow

DESK_AREA_SIDE = math.sqrt(30 * math.pi * 200.0 ** 2 / 5)  # average degree ~5


def desk_config(policy: str, flows: int, seed: int, duration: int = 10000) -> ScenarioConfig:
    """The 30-node random-deployment scenario used by the trend checks."""
    return ScenarioConfig(
        name="desk",
        seed=seed,
        duration_slots=duration,
        policy=policy,
        node_count=30,
        area=(DESK_AREA_SIDE, DESK_AREA_SIDE),
        radius=200.0,
        flow_count=flows,
        flow_mean_interarrival=25.0,
        packet_size_bits=4000,
        capacity_j=5e-3,
        repetitions=1,
    )


# Training setup for the policy-discrimination checks: the relay carries a
# slow forward flow and a heavily loaded return flow, so almost every
# overheard forward packet ends up inside a coded packet. The wide
# transmit/receive power gap keeps the lesson the same as at full scale,
# where an overheard packet is typically reused more than once.
TRAINED_CHAIN_SEED = 77


def trained_chain_config(name: str, seed: int = TRAINED_CHAIN_SEED,
                         duration: int = 90000) -> ScenarioConfig:
    base = canonical_scenario(name)
    flows = (
        Flow(0, 0, 1, 4000, 12.0, 0, duration),
        Flow(1, 1, 2, 4000, 1.8, 0, duration),
    )
    return base.replace(
        flows=flows,
        duration_slots=duration,
        policy="learned",
        capacity_j=0.05,
        report_period_slots=5,
        seed=seed,
        usefulness_deadline_slots=80,
        receive_power_w=45e-6,
        idle_power_w=20e-6,
        exploration_end=0.0,
        learning_rate=0.02,
    )


@pytest.fixture
def chain():
    return canonical_scenario("chain-fig1")


@pytest.fixture
def two_way():
    return canonical_scenario("two-way-relay")
