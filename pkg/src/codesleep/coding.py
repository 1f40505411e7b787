"""Two-hop XOR inter-flow coding: frames, coding-set selection, decoding,
overheard-pool aging, and the reception-report knowledge machinery.

Coded packets are decoded one hop away from the coder. A node can decode a
coded packet iff it already holds all but one constituent, gathered from its
own generated packets, its reception history, or its overheard pool. The
pool entries age out after a configurable deadline; entries that never
participated in a coded packet are finalized as useless so the agent's
overhear decision earns nothing for them.

Functions here take any node-like object exposing ``tx_queue``, ``pool``,
``own_cache``, ``recv_cache``, ``knowledge`` and ``degree_history``; the
simulation engine owns those containers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple

from .agent import RewardEvent


class DecodeFailure(Exception):
    """Two or more constituents missing: the coding rule was violated upstream."""


class _Redundant:
    def __repr__(self):
        return "REDUNDANT"


#: Returned by decode() when every constituent is already known.
REDUNDANT = _Redundant()


@dataclass(frozen=True)
class NativePacket:
    """A pure (uncoded) packet. Payloads are real bytes so decoding is checkable."""

    id: int
    flow_id: int
    source: int
    destination: int
    next_hop: int
    payload: bytes
    created_slot: int

    def with_next_hop(self, hop: int) -> "NativePacket":
        return replace(self, next_hop=hop)


class PacketStub(NamedTuple):
    """Header metadata for one constituent of a coded packet (no payload)."""

    id: int
    flow_id: int
    source: int
    destination: int
    next_hop: int
    created_slot: int


def _stub(packet: NativePacket) -> PacketStub:
    return PacketStub(
        packet.id, packet.flow_id, packet.source, packet.destination,
        packet.next_hop, packet.created_slot,
    )


@dataclass(frozen=True)
class CodedPacket:
    """XOR of two or more natives headed to pairwise-distinct next hops."""

    constituents: tuple[PacketStub, ...]
    payload: bytes

    @property
    def degree(self) -> int:
        return len(self.constituents)

    @property
    def next_hops(self) -> tuple[int, ...]:
        return tuple(stub.next_hop for stub in self.constituents)


@dataclass(frozen=True)
class ReceptionReport:
    """Broadcast listing of the packet ids a node currently holds."""

    sender: int
    packet_ids: frozenset[int]


def _xor_bytes(chunks: Iterable[bytes], size: int) -> bytes:
    acc = 0
    for chunk in chunks:
        acc ^= int.from_bytes(chunk, "big")
    return acc.to_bytes(size, "big")


def encode(packets: list[NativePacket]) -> CodedPacket:
    """XOR-combine packets into one coded frame.

    Header bits (constituent ids and next hops) are treated as free, so the
    coded payload is exactly one packet long. Duplicate next hops or unequal
    payload sizes are rejected.
    """
    if len(packets) < 2:
        raise ValueError("a coded packet needs at least two constituents")
    size = len(packets[0].payload)
    if any(len(p.payload) != size for p in packets):
        raise ValueError("constituent payload sizes differ")
    ids = [p.id for p in packets]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate constituent ids")
    hops = [p.next_hop for p in packets]
    if len(set(hops)) != len(hops):
        raise ValueError("constituent next hops must be pairwise distinct")
    payload = _xor_bytes((p.payload for p in packets), size)
    return CodedPacket(tuple(_stub(p) for p in packets), payload)


def decode(coded: CodedPacket, known) -> NativePacket | _Redundant:
    """Recover the single missing constituent from a coded packet.

    ``known`` maps packet id to NativePacket (any mapping with membership
    and item access). Returns REDUNDANT when nothing is missing and raises
    DecodeFailure when two or more constituents are missing.
    """
    missing = [stub for stub in coded.constituents if stub.id not in known]
    if not missing:
        return REDUNDANT
    if len(missing) > 1:
        raise DecodeFailure(f"{len(missing)} constituents missing of {coded.degree}")
    target = missing[0]
    size = len(coded.payload)
    payload = _xor_bytes(
        [coded.payload] + [known[s.id].payload for s in coded.constituents if s.id != target.id],
        size,
    )
    return NativePacket(
        target.id, target.flow_id, target.source, target.destination,
        target.next_hop, payload, target.created_slot,
    )


@dataclass
class OverheardEntry:
    """One pooled overheard packet with its usefulness bookkeeping.

    ``times_used`` counts how many coded packets the entry was seen inside
    before its deadline; each participation saved one transmission nearby.
    ``origin_epoch`` is the decision epoch at which the packet was
    overheard, kept for diagnostics and credit tracing.
    """

    packet: NativePacket
    overheard_slot: int
    expiry_slot: int
    times_used: int = 0
    origin_epoch: int = -1

    def live(self, slot: int) -> bool:
        return self.overheard_slot <= slot <= self.expiry_slot


class OverheardPool:
    """Bounded FIFO pool of overheard natives with deadline-based aging."""

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError("pool capacity must be non-negative")
        self.capacity = capacity
        self.entries: dict[int, OverheardEntry] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, packet_id: int) -> bool:
        return packet_id in self.entries

    def get(self, packet_id: int) -> OverheardEntry | None:
        return self.entries.get(packet_id)

    def add(self, entry: OverheardEntry) -> OverheardEntry | None:
        """Insert, evicting the oldest entry when full. Returns the evictee."""
        evicted = None
        if self.capacity == 0:
            return entry
        if len(self.entries) >= self.capacity:
            oldest = next(iter(self.entries))
            evicted = self.entries.pop(oldest)
        self.entries[entry.packet.id] = entry
        return evicted

    def live_ids(self, slot: int) -> list[int]:
        return [pid for pid, e in self.entries.items() if e.live(slot)]

    def age(self, slot: int) -> list[OverheardEntry]:
        """Drop entries past their deadline; return all evicted entries."""
        if not self.entries:
            return []
        dead = [pid for pid, e in self.entries.items() if slot > e.expiry_slot]
        return [self.entries.pop(pid) for pid in dead]


def age_pool(node, slot: int) -> list[OverheardEntry]:
    """Evict expired pool entries; return the ones that were never useful.

    Entries evicted with a non-zero use count already produced their reward
    events, so only the useless ones are reported back (the decision that
    stored them closes with zero revenue).
    """
    return [e for e in node.pool.age(slot) if e.times_used == 0]


class KnowledgeTable:
    """What each neighbor is believed to hold, with per-report freshness."""

    def __init__(self):
        self._by_neighbor: dict[int, tuple[frozenset[int], int]] = {}

    def update(self, neighbor: int, packet_ids, slot: int) -> None:
        """A new report fully replaces whatever was believed before."""
        self._by_neighbor[neighbor] = (frozenset(packet_ids), slot)

    def holds(self, neighbor: int, packet_id: int, slot: int, deadline: int) -> bool:
        rec = self._by_neighbor.get(neighbor)
        if rec is None:
            return False
        ids, fresh = rec
        if fresh < slot - deadline:
            return False
        return packet_id in ids

    def believed(self, neighbor: int, slot: int, deadline: int) -> frozenset[int]:
        rec = self._by_neighbor.get(neighbor)
        if rec is None or rec[1] < slot - deadline:
            return frozenset()
        return rec[0]


def update_knowledge(table: KnowledgeTable, neighbor: int, report_ids, slot: int) -> None:
    table.update(neighbor, report_ids, slot)


def held_ids(node, slot: int, deadline: int) -> frozenset[int]:
    """Packet ids the node currently holds: generated, received, or pooled."""
    ids = set(node.pool.live_ids(slot))
    ids.update(pid for pid, (_, added) in node.own_cache.items() if slot - added <= deadline)
    ids.update(pid for pid, (_, added) in node.recv_cache.items() if slot - added <= deadline)
    return frozenset(ids)


def emit_reception_report(node, slot: int, deadline: int) -> ReceptionReport:
    """The node's current holdings as a broadcastable report."""
    return ReceptionReport(node.id, held_ids(node, slot, deadline))


def known_packets(node, slot: int, deadline: int) -> dict[int, NativePacket]:
    """Decodable material: own generated packets, reception history, pool."""
    known: dict[int, NativePacket] = {}
    for pid, (pkt, added) in node.own_cache.items():
        if slot - added <= deadline:
            known[pid] = pkt
    for pid, (pkt, added) in node.recv_cache.items():
        if slot - added <= deadline:
            known[pid] = pkt
    for pid in node.pool.live_ids(slot):
        known[pid] = node.pool.entries[pid].packet
    return known


def select_coding_set(node, knowledge: KnowledgeTable, slot: int, deadline: int,
                      commit: bool = True) -> NativePacket | CodedPacket:
    """COPE's practical rule: grow a coding set greedily from the queue head.

    Scanning the queue in FIFO order, a packet joins the set iff its next
    hop is new and, per the knowledge table, every chosen packet's next hop
    holds it while its own next hop holds every chosen packet. That keeps
    each intended receiver able to decode. With ``commit`` the chosen
    packets leave the queue.
    """
    queue = node.tx_queue
    if not queue:
        raise ValueError("transmission queue is empty")
    head = queue[0]
    chosen = [head]
    hops = {head.next_hop}
    for pkt in list(queue)[1:]:
        if pkt.next_hop in hops:
            continue
        if not all(knowledge.holds(c.next_hop, pkt.id, slot, deadline) for c in chosen):
            continue
        if not all(knowledge.holds(pkt.next_hop, c.id, slot, deadline) for c in chosen):
            continue
        chosen.append(pkt)
        hops.add(pkt.next_hop)
    if commit:
        for pkt in chosen:
            queue.remove(pkt)
    if len(chosen) >= 2:
        return encode(chosen)
    return head


@dataclass
class ReceiveResult:
    """What processing one incoming frame produced."""

    events: list[RewardEvent]
    recovered: list[NativePacket]
    redundant: bool = False
    failed: bool = False


def _credit_pool(node, coded: CodedPacket, slot: int, reward_amount: float) -> list[RewardEvent]:
    """Bump usefulness for pooled packets appearing inside a coded frame.

    Every hit within the entry's live window saves one transmission in the
    neighborhood and earns one reward event attributed to the decision that
    overheard it.
    """
    events = []
    for stub in coded.constituents:
        entry = node.pool.get(stub.id)
        if entry is not None and entry.live(slot):
            entry.times_used += 1
            events.append(RewardEvent(reward_amount, entry.origin_epoch, slot))
    return events


def on_receive(node, frame, slot: int, deadline: int, reward_amount: float) -> ReceiveResult:
    """Process a frame addressed to this node.

    Native frames are cached and handed back for delivery or forwarding.
    Coded frames first credit any pooled constituents, then decode the one
    missing packet; a decode returning material this node already had is
    flagged redundant, and a frame with two or more unknown constituents is
    a coding-rule violation surfaced as ``failed``.
    """
    if isinstance(frame, NativePacket):
        node.degree_history.append(1)
        node.recv_cache[frame.id] = (frame, slot)
        return ReceiveResult(events=[], recovered=[frame])

    node.degree_history.append(frame.degree)
    events = _credit_pool(node, frame, slot, reward_amount)
    target = next((s for s in frame.constituents if s.next_hop == node.id), None)
    known = known_packets(node, slot, deadline)
    try:
        result = decode(frame, known)
    except DecodeFailure:
        return ReceiveResult(events=events, recovered=[], failed=True)
    if result is REDUNDANT:
        return ReceiveResult(events=events, recovered=[], redundant=True)
    node.recv_cache[result.id] = (result, slot)
    recovered = [result] if target is not None and result.id == target.id else []
    return ReceiveResult(events=events, recovered=recovered)


def on_overhear(node, frame, slot: int, deadline: int, reward_amount: float,
                origin_epoch: int) -> ReceiveResult:
    """Process a frame this node chose to overhear.

    Overheard natives enter the pool (unless already held); overheard coded
    frames only credit pooled constituents, since the evidence of usefulness
    is the same whether the coded packet was addressed here or not.
    """
    if isinstance(frame, NativePacket):
        node.degree_history.append(1)
        if frame.id not in held_ids(node, slot, deadline):
            entry = OverheardEntry(frame, slot, slot + deadline, origin_epoch=origin_epoch)
            node.pool.add(entry)
        return ReceiveResult(events=[], recovered=[])
    node.degree_history.append(frame.degree)
    events = _credit_pool(node, frame, slot, reward_amount)
    return ReceiveResult(events=events, recovered=[])
