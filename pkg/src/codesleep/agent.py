"""Per-node decision maker: quantized state, delay-extended Q-table, updates.

Each node decides Overhear or Sleep at every overhearing opportunity (a
decision epoch). Because the payoff of overhearing is only revealed when a
coded packet arrives several epochs later, the Q-table carries an extra
delay-estimate dimension: an entry value[state][action][delay] hypothesizes
that rewards arrive ``delay`` epochs late. Every epoch updates all delay
slices against the ring of recent decisions; the slice matching the true
delay accumulates consistent credit and wins the argmax over time.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple


class Action(IntEnum):
    OVERHEAR = 0
    SLEEP = 1


class AgentState(NamedTuple):
    """Quantized node state: residual-energy level and coding-degree level."""

    energy_level: int
    degree_level: int


class RewardEvent(NamedTuple):
    """A reward amount attributed to the decision made at ``origin_epoch``.

    Events may arrive out of order; the learner never uses ``origin_epoch``
    (it learns the delay instead), but tests and diagnostics do.
    """

    amount: float
    origin_epoch: int
    arrival_slot: int


class DecisionRecord(NamedTuple):
    epoch: int
    state_index: int
    action: int
    timestamp: float


@dataclass(frozen=True)
class EpsilonSchedule:
    """Linear exploration decay from ``start`` to ``end`` over ``horizon`` epochs."""

    start: float = 0.3
    end: float = 0.02
    horizon: int = 4000

    def __post_init__(self):
        if not 0.0 <= self.end <= self.start <= 1.0:
            raise ValueError("need 0 <= end <= start <= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    def value(self, epoch: int) -> float:
        if epoch >= self.horizon:
            return self.end
        return self.start + (self.end - self.start) * (epoch / self.horizon)


@dataclass(frozen=True)
class StateQuantizer:
    """Maps raw node observations onto the discrete (energy, degree) grid."""

    capacity: float
    energy_levels: int = 8
    degree_levels: int = 10
    degree_window: int = 15

    def __post_init__(self):
        if self.capacity <= 0 or self.energy_levels < 1 or self.degree_levels < 1:
            raise ValueError("bad quantizer parameters")

    @property
    def states(self) -> int:
        return self.energy_levels * self.degree_levels

    def index(self, state: AgentState) -> int:
        return (state.energy_level - 1) * self.degree_levels + (state.degree_level - 1)


def observe_state(node, quantizer: StateQuantizer) -> AgentState:
    """Quantize a node's residual energy and recent mean coding degree.

    Energy maps to ceil(levels * residual / capacity), clamped to [1, levels].
    The degree level bins the mean of the recent degree history uniformly
    over [1.0, 2.0] into right-closed intervals; means of exactly 1.0 land in
    level 1 and means of 2.0 or more saturate at the top level. With no
    history yet the degree level defaults to 1.
    """
    levels = quantizer.energy_levels
    frac = node.residual_energy / quantizer.capacity
    e_level = min(levels, max(1, math.ceil(levels * frac)))

    hist = node.degree_history
    if not hist:
        g_level = 1
    else:
        mean = sum(hist) / len(hist)
        g = quantizer.degree_levels
        if mean <= 1.0:
            g_level = 1
        elif mean >= 2.0:
            g_level = g
        else:
            # right-closed bins; the tiny slack keeps exact bin edges in the
            # lower bin despite binary float representation of the mean
            g_level = min(g, max(1, math.ceil((mean - 1.0) * g - 1e-9)))
    return AgentState(e_level, g_level)


class QTable:
    """Dense value table over (state, action, delay-estimate).

    Per state the entries are stored flat in delay-major order
    (delay * 2 + action) so a linear first-max scan realizes the tie-break
    rule: smallest delay first, Overhear before Sleep.
    """

    def __init__(self, states: int, max_delay: int, learning_rate: float, discount_rate: float):
        if states < 1 or max_delay < 0:
            raise ValueError("need at least one state and a non-negative max delay")
        if not 0.0 <= learning_rate <= 1.0:
            raise ValueError("learning rate must lie in [0, 1]")
        if discount_rate <= 0.0:
            raise ValueError("discount rate must be positive")
        self.states = states
        self.max_delay = max_delay
        self.learning_rate = learning_rate
        self.discount_rate = discount_rate
        self.values: list[list[float]] = [[0.0] * (2 * (max_delay + 1)) for _ in range(states)]

    @property
    def size(self) -> int:
        return self.states * 2 * (self.max_delay + 1)

    def get(self, state: int, action: int, delay: int) -> float:
        return self.values[state][delay * 2 + action]

    def set(self, state: int, action: int, delay: int, value: float) -> None:
        self.values[state][delay * 2 + action] = value

    def state_value(self, state: int) -> float:
        return max(self.values[state])

    def best(self, state: int) -> tuple[float, Action, int]:
        """(value, action, delay) of the first maximal entry in tie-break order."""
        row = self.values[state]
        best_i = 0
        best_v = row[0]
        for i in range(1, len(row)):
            if row[i] > best_v:
                best_v = row[i]
                best_i = i
        return best_v, Action(best_i % 2), best_i // 2

    def rows(self):
        """(state, action, delay, value) tuples, one per entry, in stable order."""
        for s, row in enumerate(self.values):
            for i, v in enumerate(row):
                yield s, i % 2, i // 2, v


def select(table: QTable, state: int, epsilon: float, rng: random.Random) -> tuple[Action, int]:
    """Pick the most valuable delay estimate, then the best action under it.

    With probability epsilon the action is replaced by a uniform draw; the
    chosen delay estimate is kept either way.
    """
    _, action, delay = table.best(state)
    if epsilon > 0.0 and rng.random() < epsilon:
        action = Action(rng.randrange(2))
    return action, delay


def elapsed_discount(d_late: float, d_early: float, discount_rate: float) -> float:
    """exp(-rate * elapsed). Identity at zero gap, strictly decreasing after."""
    if d_late < d_early:
        raise ValueError("elapsed interval must be non-negative")
    return math.exp(-discount_rate * (d_late - d_early))


def compose_reward(action: Action, receive_cost: float) -> float:
    """Immediate reward component of a decision.

    Sleeping earns and costs nothing. Overhearing pays the reception energy
    up front; any revenue arrives later as RewardEvents worth one
    transmission energy per time the overheard packet shows up inside a
    coded packet.
    """
    if action == Action.SLEEP:
        return 0.0
    return -receive_cost


class SleepAgent:
    """Learning agent driven once per decision epoch.

    ``time_unit`` rescales slot timestamps before discounting so the
    discount rate keeps its meaning regardless of how sparse the node's
    epochs are; the engine defaults it to the node's expected epoch gap.
    """

    learned = True

    def __init__(
        self,
        table: QTable,
        schedule: EpsilonSchedule,
        rng: random.Random,
        time_unit: float = 1.0,
    ):
        if time_unit <= 0:
            raise ValueError("time unit must be positive")
        self.table = table
        self.schedule = schedule
        self.rng = rng
        self.time_unit = time_unit
        self.ring: deque[DecisionRecord] = deque(maxlen=table.max_delay + 1)
        self.epoch = 0
        self.reward_log: list[float] = []
        self.action_log: list[int] = []
        self.greedy_log: list[int] = []
        self.state_log: list[int] = []

    def on_epoch(self, state_index: int, now: float, rewards) -> Action:
        """Fold the rewards since the last epoch into all delay slices, then act.

        All reward amounts collected in the interval are summed into one
        total; attribution to the right past decision is what the delay
        dimension is for. Slices whose past record does not exist yet
        (warm-up) are skipped.
        """
        total = 0.0
        for ev in rewards:
            total += ev.amount
        if self.ring:
            self.reward_log.append(total)
            self._update_all(state_index, now, total)

        _, greedy, _ = self.table.best(state_index)
        action = greedy
        epsilon = self.schedule.value(self.epoch)
        if epsilon > 0.0 and self.rng.random() < epsilon:
            action = Action(self.rng.randrange(2))
        self.greedy_log.append(int(greedy))
        self.action_log.append(int(action))
        self.state_log.append(state_index)
        self.ring.append(DecisionRecord(self.epoch, state_index, int(action), now))
        self.epoch += 1
        return action

    def _update_all(self, new_state: int, new_time: float, total: float) -> None:
        table = self.table
        values = table.values
        beta = table.learning_rate
        rate = table.discount_rate / self.time_unit
        ring = self.ring
        n = len(ring)
        for delay in range(table.max_delay + 1):
            if delay >= n:
                break
            rec = ring[n - 1 - delay]
            if delay == 0:
                succ_state, succ_time = new_state, new_time
            else:
                succ = ring[n - delay]
                succ_state, succ_time = succ.state_index, succ.timestamp
            disc = math.exp(-rate * (succ_time - rec.timestamp))
            target = total + disc * max(values[succ_state])
            idx = delay * 2 + rec.action
            row = values[rec.state_index]
            row[idx] += beta * (target - row[idx])
