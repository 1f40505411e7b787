"""The slotted discrete-event engine.

Each slot runs through a fixed pipeline: inject scheduled arrivals, grant a
conflict-free set of transmissions (seeded random permutation over the
candidates), let every bystander that hears an announcement not addressed
to it decide Overhear or Sleep, deliver frames according to those
decisions, age the overheard pools, and settle the energy ledger. Intended
receivers always stay awake for their own traffic; the agent's choice
exists only at overhearing opportunities.

Granted transmissions announce (sender, intended receiver set) to every
neighbor of the sender before bystanders commit, which is what makes the
decision epoch well defined. The interference rule is symmetric unit-disk:
a candidate conflicts with a granted transmission when either sender is
within radio range of any of the other's intended receivers; senders being
receivers themselves fall out of the same test at distance zero.
"""

from __future__ import annotations

import logging
import random
import zlib
from collections import deque
from dataclasses import dataclass, field

from . import coding
from .agent import (
    Action,
    EpsilonSchedule,
    QTable,
    RewardEvent,
    SleepAgent,
    StateQuantizer,
    compose_reward,
    observe_state,
)
from .baselines import FixedPolicy, FixedPolicyAgent
from .config import ScenarioConfig, parse_policy
from .metrics import MetricsReport, NodeEnergySummary
from .world import (
    Flow,
    InfiniteGap,
    RouteFailure,
    Topology,
    build_topology,
    expected_epoch_gap,
    flow_rates,
    generate_arrivals,
    next_hop,
    random_topology,
    route_path,
)

log = logging.getLogger("codesleep.engine")

MODE_SEND = "S"
MODE_RECEIVE = "R"
MODE_OVERHEAR = "O"
MODE_IDLE = "I"
MODE_SLEEP = "Z"


@dataclass(frozen=True)
class EnergyModel:
    """Per-slot energy costs. Sleeping is free; everything else is power x slot."""

    transmit_power_w: float
    receive_power_w: float
    idle_power_w: float
    slot_seconds: float
    capacity_j: float
    recharge_j_per_slot: float = 0.0

    def __post_init__(self):
        if min(self.transmit_power_w, self.receive_power_w, self.idle_power_w) < 0:
            raise ValueError("powers must be non-negative")
        if self.slot_seconds <= 0:
            raise ValueError("slot duration must be positive")
        if self.capacity_j <= 0:
            raise ValueError("capacity must be positive")

    @property
    def transmit_cost(self) -> float:
        return self.transmit_power_w * self.slot_seconds

    @property
    def receive_cost(self) -> float:
        return self.receive_power_w * self.slot_seconds

    @property
    def idle_cost(self) -> float:
        return self.idle_power_w * self.slot_seconds


class NodeRuntime:
    """Mutable per-node state: queues, caches, energy ledger, agent handle."""

    __slots__ = (
        "id", "residual_energy", "initial_energy", "recharged", "shortfall",
        "alive", "death_slot", "tx_queue", "pool", "own_cache", "recv_cache",
        "knowledge", "degree_history", "agent", "pending_rewards",
        "sends", "receives", "overhears", "idle_slots", "sleep_slots",
        "report_due", "report_offset", "last_report_ids", "last_report_slot",
    )

    def __init__(self, node_id: int, capacity: float, agent, pool_capacity: int,
                 degree_window: int, report_offset: int):
        self.id = node_id
        self.residual_energy = capacity
        self.initial_energy = capacity
        self.recharged = 0.0
        self.shortfall = 0.0
        self.alive = True
        self.death_slot: int | None = None
        self.tx_queue: deque[coding.NativePacket] = deque()
        self.pool = coding.OverheardPool(pool_capacity)
        self.own_cache: dict[int, tuple[coding.NativePacket, int]] = {}
        self.recv_cache: dict[int, tuple[coding.NativePacket, int]] = {}
        self.knowledge = coding.KnowledgeTable()
        self.degree_history: deque[int] = deque(maxlen=degree_window)
        self.agent = agent
        self.pending_rewards: list[RewardEvent] = []
        self.sends = 0
        self.receives = 0
        self.overhears = 0
        self.idle_slots = 0
        self.sleep_slots = 0
        self.report_due = False
        self.report_offset = report_offset
        self.last_report_ids: frozenset[int] = frozenset()
        self.last_report_slot = -(10 ** 9)

    def drain_rewards(self) -> list[RewardEvent]:
        events = self.pending_rewards
        self.pending_rewards = []
        return events


@dataclass(frozen=True)
class Transmission:
    sender: int
    frame: object  # NativePacket | CodedPacket | ReceptionReport
    receivers: tuple[int, ...]
    advertised: frozenset[int]
    control: bool

    @property
    def degree(self) -> int:
        return getattr(self.frame, "degree", 1)


@dataclass
class SlotOutcome:
    """What happened in one slot: modes, grants, decisions, collisions."""

    slot: int
    modes: list[str | None]
    transmissions: list[Transmission] = field(default_factory=list)
    collisions: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)
    decisions: dict[int, Action] = field(default_factory=dict)
    audible: dict[int, list[Transmission]] = field(default_factory=dict)


class World:
    """Owns all mutable run state; built once per repetition."""

    def __init__(self, config: ScenarioConfig, trace_sink=None):
        self.config = config
        self.trace_sink = trace_sink
        seed_stream = random.Random(config.seed)
        self.topology_seed = seed_stream.getrandbits(48)
        self.flow_seed = seed_stream.getrandbits(48)
        self.mac_seed = seed_stream.getrandbits(48)
        self.node_seed = seed_stream.getrandbits(48)
        self.payload_seed = seed_stream.getrandbits(48)

        if config.positions is not None:
            self.topology = build_topology(config.positions, config.radius)
        else:
            self.topology = random_topology(
                config.node_count, config.area, config.radius, self.topology_seed
            )
        self.flows = self._build_flows()
        self.model = EnergyModel(
            config.transmit_power_w, config.receive_power_w, config.idle_power_w,
            config.slot_seconds, config.capacity_j, config.recharge_j_per_slot,
        )
        self.quantizer = StateQuantizer(
            capacity=config.capacity_j,
            energy_levels=config.energy_levels,
            degree_levels=config.degree_levels,
            degree_window=config.degree_window,
        )
        self.rng_mac = random.Random(self.mac_seed)
        self.nodes = [self._build_node(i) for i in range(len(self.topology))]
        self.arrivals: dict[int, list[Flow]] = {}
        for flow in self.flows:
            for slot in generate_arrivals(flow, self.flow_seed + flow.id):
                self.arrivals.setdefault(slot, []).append(flow)

        self.next_packet_id = 0
        self.first_tx: dict[int, int] = {}
        self.delivered: set[int] = set()
        self.trace_crc = 0
        self.report = MetricsReport(
            scenario=config.name,
            policy=config.policy,
            seed=config.seed,
            nodes=len(self.topology),
            flow_count=len(self.flows),
            duration_slots=config.duration_slots,
        )

    def _build_flows(self) -> tuple[Flow, ...]:
        cfg = self.config
        if cfg.flows is not None:
            return cfg.flows
        rng = random.Random(self.flow_seed)
        n = len(self.topology)
        flows = []
        for fid in range(cfg.flow_count):
            # prefer endpoint pairs that greedy routing can serve and that
            # are not direct neighbors, so flows actually traverse relays
            src, dst = 0, min(1, n - 1)
            best_score = -1
            for _ in range(96):
                a = rng.randrange(n)
                b = rng.randrange(n - 1)
                if b >= a:
                    b += 1
                score = self._pair_score(a, b)
                if score > best_score:
                    src, dst, best_score = a, b, score
                if best_score == 2:
                    break
            flows.append(Flow(
                id=fid, source=src, destination=dst,
                packet_size_bits=cfg.packet_size_bits,
                mean_interarrival=cfg.flow_mean_interarrival,
                start=0, end=cfg.duration_slots,
            ))
        return tuple(flows)

    def _pair_score(self, src: int, dst: int) -> int:
        try:
            route_path(self.topology, src, dst)
        except RouteFailure:
            return 0
        return 1 if dst in self.topology.neighbors[src] else 2

    def _build_node(self, node_id: int) -> NodeRuntime:
        cfg = self.config
        kind, prob = parse_policy(cfg.policy)
        rng = random.Random(self.node_seed + 7919 * node_id)
        if kind == "learned":
            table = QTable(
                cfg.energy_levels * cfg.degree_levels,
                cfg.max_reward_delay, cfg.learning_rate, cfg.discount_rate,
            )
            schedule = EpsilonSchedule(
                cfg.exploration_start, cfg.exploration_end, cfg.exploration_horizon
            )
            agent = SleepAgent(table, schedule, rng, time_unit=self._time_unit(node_id))
        else:
            policy = FixedPolicy(kind, prob) if kind == "random" else FixedPolicy(kind)
            agent = FixedPolicyAgent(policy, rng)
        return NodeRuntime(
            node_id, cfg.capacity_j, agent, cfg.pool_capacity,
            cfg.degree_window, node_id % cfg.report_period_slots,
        )

    def _time_unit(self, node_id: int) -> float:
        if self.config.time_unit_slots is not None:
            return self.config.time_unit_slots
        if not hasattr(self, "_rates"):
            self._rates = flow_rates(self.topology, self.flows)
        try:
            return max(1.0, expected_epoch_gap(self.topology, self._rates, node_id))
        except InfiniteGap:
            return 1.0

    def new_packet(self, flow: Flow, slot: int, hop: int) -> coding.NativePacket:
        pid = self.next_packet_id
        self.next_packet_id += 1
        size = flow.packet_size_bits // 8
        payload = random.Random(self.payload_seed ^ (pid * 2654435761)).randbytes(size)
        return coding.NativePacket(pid, flow.id, flow.source, flow.destination,
                                   hop, payload, slot)


def account_energy(node: NodeRuntime, mode: str, model: EnergyModel, slot: int) -> None:
    """Settle one slot for one node: deduct by mode, recharge, clamp, mark death.

    The deduction never drives the residual negative; if the node cannot
    cover the full cost the difference is tracked as a shortfall so the
    energy ledger still balances exactly. A node whose residual ends the
    slot at zero is dead from the next slot on.
    """
    if mode == MODE_SEND:
        cost = model.transmit_cost
        node.sends += 1
    elif mode == MODE_RECEIVE:
        cost = model.receive_cost
        node.receives += 1
    elif mode == MODE_OVERHEAR:
        cost = model.receive_cost
        node.overhears += 1
    elif mode == MODE_IDLE:
        cost = model.idle_cost
        node.idle_slots += 1
    else:
        cost = 0.0
        node.sleep_slots += 1
    deduct = cost if cost <= node.residual_energy else node.residual_energy
    node.shortfall += cost - deduct
    node.residual_energy -= deduct
    if model.recharge_j_per_slot > 0.0:
        gain = min(model.recharge_j_per_slot, model.capacity_j - node.residual_energy)
        node.residual_energy += gain
        node.recharged += gain
    if node.residual_energy <= 0.0:
        node.residual_energy = 0.0
        node.alive = False
        node.death_slot = slot


def _plan_transmission(world: World, node: NodeRuntime, slot: int) -> Transmission:
    """The data frame this node would send if granted (no state changes)."""
    deadline = world.config.usefulness_deadline_slots
    frame = coding.select_coding_set(node, node.knowledge, slot, deadline, commit=False)
    if isinstance(frame, coding.CodedPacket):
        receivers = tuple(sorted(frame.next_hops))
    else:
        receivers = (frame.next_hop,)
    advertised = coding.held_ids(node, slot, deadline)
    return Transmission(node.id, frame, receivers, advertised, control=False)


def _plan_report(world: World, node: NodeRuntime, slot: int) -> Transmission | None:
    """A standalone reception report, or None when there is nothing new to say.

    The airtime trigger is fresh pool or source material (what neighbors
    need for new coding decisions) or a staleness refresh; delivery churn at
    final destinations never justifies a broadcast. A sent report still
    lists the node's complete holdings.
    """
    cfg = world.config
    deadline = cfg.usefulness_deadline_slots
    refresh = max(1, deadline // 2)
    stale = slot - node.last_report_slot >= refresh
    if not stale and not node.pool.entries and not node.own_cache:
        node.report_due = False
        return None
    neighbors = world.topology.neighbors[node.id]
    ids = coding.held_ids(node, slot, deadline)
    codable = frozenset(node.pool.live_ids(slot)) | frozenset(
        pid for pid, (_, added) in node.own_cache.items() if slot - added <= deadline
    )
    if not neighbors or not ids or (codable <= node.last_report_ids and not stale):
        node.report_due = False
        return None
    report = coding.ReceptionReport(node.id, ids)
    return Transmission(node.id, report, tuple(sorted(neighbors)), ids, control=True)


def _conflicts(topology: Topology, a: Transmission, b: Transmission) -> bool:
    """Symmetric unit-disk interference test between two planned grants."""
    nb_a = topology.neighbors[a.sender]
    nb_b = topology.neighbors[b.sender]
    for r in b.receivers:
        if r == a.sender or r in nb_a:
            return True
    for r in a.receivers:
        if r == b.sender or r in nb_b:
            return True
    return False


def schedule_slot(world: World, slot: int, rng: random.Random) -> SlotOutcome:
    """Grant a conflict-free data transmission set in seeded permutation order.

    Candidates are alive nodes with a non-empty transmission queue. Each is
    granted iff it does not conflict with a transmission granted earlier in
    the permutation. Granted senders commit their coding-set selection (the
    chosen packets leave the queue) and piggyback their current holdings
    list on the frame. Standalone reception reports ride a control
    subchannel and are scheduled separately once bystander decisions are
    known (see schedule_reports).
    """
    outcome = SlotOutcome(slot, [None] * len(world.nodes))
    candidates = [n for n in world.nodes if n.alive and n.tx_queue]
    rng.shuffle(candidates)
    deadline = world.config.usefulness_deadline_slots
    for node in candidates:
        tx = _plan_transmission(world, node, slot)
        if any(_conflicts(world.topology, tx, other) for other in outcome.transmissions):
            continue
        frame = coding.select_coding_set(node, node.knowledge, slot, deadline,
                                         commit=True)
        constituents = (
            frame.constituents if isinstance(frame, coding.CodedPacket) else (frame,)
        )
        for item in constituents:
            world.first_tx.setdefault(item.id, slot)
        node.report_due = False
        node.last_report_ids = tx.advertised
        node.last_report_slot = slot
        outcome.transmissions.append(tx)
        outcome.modes[node.id] = MODE_SEND
    return outcome


def schedule_reports(world: World, outcome: SlotOutcome, slot: int) -> None:
    """Emit due standalone reports from nodes that would otherwise idle.

    Reports are short control broadcasts abstracted onto a subchannel: they
    never contend with data, and any neighbor whose radio is already on
    picks them up at no extra energy. The sender still spends a transmit
    slot, so only nodes with nothing better to do (mode Idle) report; busy
    or sleeping nodes try again at their next due slot.
    """
    for node in world.nodes:
        if not node.alive or not node.report_due:
            continue
        if outcome.modes[node.id] != MODE_IDLE:
            continue
        tx = _plan_report(world, node, slot)
        if tx is None:
            continue
        node.report_due = False
        node.last_report_ids = tx.advertised
        node.last_report_slot = slot
        outcome.transmissions.append(tx)
        outcome.modes[node.id] = MODE_SEND


def fire_epochs(world: World, outcome: SlotOutcome, slot: int) -> None:
    """Classify every awake node and run decision epochs at opportunities.

    A node hearing only traffic addressed to others faces an overhearing
    opportunity: its agent consumes the rewards collected since its last
    epoch and commits to Overhear or Sleep for this slot. Intended
    receivers are pinned to Receive and everyone else idles.
    """
    audible: dict[int, list[Transmission]] = {}
    for tx in outcome.transmissions:
        for nbr in world.topology.neighbors[tx.sender]:
            audible.setdefault(nbr, []).append(tx)
    outcome.audible = audible
    receive_cost = world.model.receive_cost
    for node in world.nodes:
        if not node.alive or outcome.modes[node.id] is not None:
            continue
        heard = audible.get(node.id)
        if not heard:
            outcome.modes[node.id] = MODE_IDLE
            continue
        addressed = [tx for tx in heard if node.id in tx.receivers]
        if addressed:
            assert len(heard) == 1, "interference rule must protect receivers"
            outcome.modes[node.id] = MODE_RECEIVE
            continue
        state = observe_state(node, world.quantizer)
        action = node.agent.on_epoch(world.quantizer.index(state), float(slot),
                                     node.drain_rewards())
        outcome.decisions[node.id] = action
        world.report.epoch_count += 1
        if action == Action.OVERHEAR:
            outcome.modes[node.id] = MODE_OVERHEAR
            cost = compose_reward(action, receive_cost)
            if cost:
                node.pending_rewards.append(RewardEvent(cost, node.agent.epoch - 1, slot))
        else:
            outcome.modes[node.id] = MODE_SLEEP


def deliver(world: World, outcome: SlotOutcome, slot: int) -> None:
    """Hand every granted frame to its receivers and willing overhearers."""
    report = world.report
    cfg = world.config
    deadline = cfg.usefulness_deadline_slots
    reward = world.model.transmit_cost
    awake = (MODE_RECEIVE, MODE_OVERHEAR, MODE_IDLE)
    for tx in outcome.transmissions:
        if tx.control:
            # control subchannel: free for any neighbor whose radio is on
            report.control_transmissions += 1
            for rid in tx.receivers:
                receiver = world.nodes[rid]
                if receiver.alive and outcome.modes[rid] in awake:
                    coding.update_knowledge(receiver.knowledge, tx.sender,
                                            tx.advertised, slot)
            continue
        report.data_transmissions += 1
        report.native_equivalent += tx.degree
        if tx.degree > 1:
            report.coded_transmissions += 1
        sender = world.nodes[tx.sender]
        for rid in tx.receivers:
            receiver = world.nodes[rid]
            if not receiver.alive:
                report.dropped_dead += 1
                continue
            coding.update_knowledge(receiver.knowledge, tx.sender, tx.advertised, slot)
            result = coding.on_receive(receiver, tx.frame, slot, deadline, reward)
            _absorb(world, receiver, result, slot)
            # the delivery handshake carries the receiver's holdings back to
            # the sender, so a coder always has fresh decoder knowledge
            coding.update_knowledge(sender.knowledge, rid,
                                    coding.held_ids(receiver, slot, deadline), slot)
    for nid, action in outcome.decisions.items():
        if action != Action.OVERHEAR:
            continue
        node = world.nodes[nid]
        heard = outcome.audible[nid]
        if len(heard) > 1:
            outcome.collisions.append((nid, tuple(tx.sender for tx in heard)))
            report.collision_overhears += 1
            continue
        tx = heard[0]
        coding.update_knowledge(node.knowledge, tx.sender, tx.advertised, slot)
        origin = node.agent.epoch - 1
        result = coding.on_overhear(node, tx.frame, slot, deadline, reward, origin)
        if isinstance(tx.frame, coding.NativePacket):
            # freshly pooled material: announce promptly, not just on period
            node.report_due = True
        _absorb(world, node, result, slot)


def _absorb(world: World, node: NodeRuntime, result: coding.ReceiveResult, slot: int) -> None:
    report = world.report
    if result.failed:
        report.decode_failures += 1
    if result.redundant:
        report.redundant_decodes += 1
    if result.events:
        node.pending_rewards.extend(result.events)
        report.useful_overhear_hits += len(result.events)
    for packet in result.recovered:
        if packet.destination == node.id:
            if packet.id not in world.delivered:
                world.delivered.add(packet.id)
                report.delivered_packets += 1
                report.delivered_bits += len(packet.payload) * 8
                report.delays.append(slot - world.first_tx[packet.id])
        else:
            try:
                hop = next_hop(world.topology, node.id, packet.destination)
            except RouteFailure:
                report.dropped_routing += 1
                continue
            node.tx_queue.append(packet.with_next_hop(hop))


def _inject_arrivals(world: World, slot: int) -> None:
    for flow in world.arrivals.get(slot, ()):
        source = world.nodes[flow.source]
        world.report.created_packets += 1
        if not source.alive:
            world.report.dropped_dead += 1
            continue
        try:
            hop = next_hop(world.topology, flow.source, flow.destination)
        except RouteFailure:
            world.report.dropped_routing += 1
            continue
        packet = world.new_packet(flow, slot, hop)
        source.own_cache[packet.id] = (packet, slot)
        source.tx_queue.append(packet)


def _age(world: World, slot: int) -> None:
    deadline = world.config.usefulness_deadline_slots
    for node in world.nodes:
        if not node.alive:
            continue
        useless = coding.age_pool(node, slot)
        world.report.useless_overhears += len(useless)
        if slot % 16 == 0:
            for cache in (node.own_cache, node.recv_cache):
                stale = [pid for pid, (_, added) in cache.items() if slot - added > deadline]
                for pid in stale:
                    del cache[pid]


def _frame_tag(frame) -> str:
    if isinstance(frame, coding.NativePacket):
        return str(frame.id)
    if isinstance(frame, coding.CodedPacket):
        return "+".join(str(s.id) for s in frame.constituents)
    return f"r{frame.sender}"


def _record_slot(world: World, outcome: SlotOutcome) -> None:
    frames = ";".join(
        f"{tx.sender}>{_frame_tag(tx.frame)}>{','.join(map(str, tx.receivers))}"
        for tx in outcome.transmissions
    )
    modes = "".join(m or "-" for m in outcome.modes)
    line = f"{outcome.slot}|{frames}|{modes}"
    world.trace_crc = zlib.crc32(line.encode(), world.trace_crc)
    if world.trace_sink is not None:
        for nid, mode in enumerate(outcome.modes):
            if mode is None:
                continue
            if mode == MODE_SEND:
                tag = next(_frame_tag(tx.frame) for tx in outcome.transmissions
                           if tx.sender == nid)
            elif mode == MODE_RECEIVE:
                tag = next(_frame_tag(tx.frame) for tx in outcome.transmissions
                           if nid in tx.receivers)
            elif mode == MODE_OVERHEAR:
                heard = outcome.audible[nid]
                tag = _frame_tag(heard[0].frame) if len(heard) == 1 else "collision"
            else:
                tag = "-"
            world.trace_sink(f"{outcome.slot},{nid},{mode},{tag}\n")


def step(world: World, slot: int) -> SlotOutcome:
    """Advance the world by one slot and return what happened."""
    _inject_arrivals(world, slot)
    for node in world.nodes:
        if node.alive and slot % world.config.report_period_slots == node.report_offset:
            node.report_due = True
    outcome = schedule_slot(world, slot, world.rng_mac)
    fire_epochs(world, outcome, slot)
    schedule_reports(world, outcome, slot)
    deliver(world, outcome, slot)
    _age(world, slot)
    for node in world.nodes:
        if node.alive:
            account_energy(node, outcome.modes[node.id], world.model, slot)
    _record_slot(world, outcome)
    return outcome


def _finalize(world: World) -> MetricsReport:
    report = world.report
    model = world.model
    by_cat = {"send": 0.0, "receive": 0.0, "overhear": 0.0, "idle": 0.0}
    for node in world.nodes:
        # actual deductions; equals the counter identity unless a death
        # truncated the final charge (tracked in shortfall)
        spent = node.initial_energy - node.residual_energy + node.recharged
        by_cat["send"] += model.transmit_cost * node.sends
        by_cat["receive"] += model.receive_cost * node.receives
        by_cat["overhear"] += model.receive_cost * node.overhears
        by_cat["idle"] += model.idle_cost * node.idle_slots
        report.energy_spent += spent
        report.node_energy.append(NodeEnergySummary(
            node.id, node.initial_energy, node.residual_energy, node.recharged,
            node.shortfall, node.sends, node.receives, node.overhears,
            node.idle_slots, node.sleep_slots, node.death_slot,
        ))
    report.energy_by_category = by_cat

    longest = max((len(n.agent.reward_log) for n in world.nodes), default=0)
    sums = [0.0] * longest
    counts = [0] * longest
    for node in world.nodes:
        for k, value in enumerate(node.agent.reward_log):
            sums[k] += value
            counts[k] += 1
    report.reward_sums = sums
    report.reward_counts = counts
    report.node_epochs = [n.agent.epoch for n in world.nodes]
    report.node_greedy_actions = [list(n.agent.greedy_log) for n in world.nodes]
    report.trace_hash = f"{world.trace_crc:08x}"
    if world.config.collect_qtables:
        rows = []
        for node in world.nodes:
            if node.agent.learned:
                rows.extend((node.id, s, a, d, v) for s, a, d, v in node.agent.table.rows())
        report.qtable_rows = rows
    return report


def run(config: ScenarioConfig, trace_sink=None) -> MetricsReport:
    """Execute one full simulation and return its metrics.

    Fully deterministic for a given config and seed: topology, arrivals,
    MAC permutations, payload bytes and agent exploration all derive from
    the master seed through fixed integer streams.
    """
    world = World(config, trace_sink)
    for slot in range(config.duration_slots):
        step(world, slot)
    return _finalize(world)
