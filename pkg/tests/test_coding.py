import random
from collections import deque
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codesleep.coding import (
    REDUNDANT,
    CodedPacket,
    DecodeFailure,
    KnowledgeTable,
    NativePacket,
    OverheardEntry,
    OverheardPool,
    age_pool,
    decode,
    emit_reception_report,
    encode,
    held_ids,
    on_overhear,
    on_receive,
    select_coding_set,
    update_knowledge,
)


def native(pid, hop=1, size=16, rng=None, dest=9):
    payload = (rng or random.Random(pid)).randbytes(size)
    return NativePacket(pid, pid, 0, dest, hop, payload, 0)


class FakeNode:
    """Minimal node-like container the coding operations expect."""

    def __init__(self, node_id=0, pool_capacity=64, degree_window=15):
        self.id = node_id
        self.tx_queue = deque()
        self.pool = OverheardPool(pool_capacity)
        self.own_cache = {}
        self.recv_cache = {}
        self.knowledge = KnowledgeTable()
        self.degree_history = deque(maxlen=degree_window)


def xor_oracle(chunks):
    size = len(chunks[0])
    out = bytearray(size)
    for chunk in chunks:
        for i, b in enumerate(chunk):
            out[i] ^= b
    return bytes(out)


def test_encode_xor_involution():
    a, b = native(1, hop=1), native(2, hop=2)
    coded = encode([a, b])
    assert xor_oracle([coded.payload, a.payload]) == b.payload
    assert coded.degree == 2


def test_encode_three_way_matches_byte_oracle():
    pkts = [native(i, hop=i) for i in range(1, 4)]
    coded = encode(pkts)
    assert coded.degree == 3
    assert coded.payload == xor_oracle([p.payload for p in pkts])


def test_encode_rejects_duplicate_next_hops():
    with pytest.raises(ValueError):
        encode([native(1, hop=2), native(2, hop=2)])


def test_encode_rejects_size_mismatch():
    with pytest.raises(ValueError):
        encode([native(1, hop=1, size=8), native(2, hop=2, size=16)])


def test_encode_needs_two_packets():
    with pytest.raises(ValueError):
        encode([native(1)])


@given(st.integers(min_value=2, max_value=4), st.integers(min_value=0, max_value=2 ** 30))
@settings(max_examples=120, deadline=None)
def test_decode_round_trip_property(degree, seed):
    rng = random.Random(seed)
    pkts = [native(i, hop=i, size=32, rng=rng) for i in range(degree)]
    coded = encode(pkts)
    for missing in pkts:
        known = {p.id: p for p in pkts if p.id != missing.id}
        out = decode(coded, known)
        assert out.id == missing.id
        assert out.payload == missing.payload


def test_decode_redundant_and_failure():
    pkts = [native(1, hop=1), native(2, hop=2)]
    coded = encode(pkts)
    assert decode(coded, {p.id: p for p in pkts}) is REDUNDANT
    with pytest.raises(DecodeFailure):
        decode(coded, {})


def test_decode_degree_three_partial():
    pkts = [native(i, hop=i) for i in range(1, 4)]
    coded = encode(pkts)
    known = {pkts[0].id: pkts[0], pkts[2].id: pkts[2]}
    out = decode(coded, known)
    assert out.payload == pkts[1].payload


def _coding_node(queue, believes):
    """Node with a queue and a knowledge table mapping hop -> held ids."""
    node = FakeNode(node_id=5)
    node.tx_queue.extend(queue)
    for hop, ids in believes.items():
        node.knowledge.update(hop, ids, slot=0)
    return node


def test_select_codes_the_relay_pair():
    p_a, p_b = native(1, hop=2), native(2, hop=3)
    node = _coding_node([p_a, p_b], {2: {2}, 3: {1}})
    frame = select_coding_set(node, node.knowledge, slot=0, deadline=50)
    assert isinstance(frame, CodedPacket)
    assert {s.id for s in frame.constituents} == {1, 2}
    assert not node.tx_queue


def test_select_single_packet_is_native():
    p = native(1, hop=2)
    node = _coding_node([p], {})
    frame = select_coding_set(node, node.knowledge, slot=0, deadline=50)
    assert frame is p
    assert not node.tx_queue


def test_select_without_knowledge_stays_native():
    p_a, p_b = native(1, hop=2), native(2, hop=3)
    node = _coding_node([p_a, p_b], {})
    frame = select_coding_set(node, node.knowledge, slot=0, deadline=50)
    assert frame is p_a
    assert list(node.tx_queue) == [p_b]


def test_select_preview_leaves_queue():
    p_a, p_b = native(1, hop=2), native(2, hop=3)
    node = _coding_node([p_a, p_b], {2: {2}, 3: {1}})
    frame = select_coding_set(node, node.knowledge, slot=0, deadline=50, commit=False)
    assert isinstance(frame, CodedPacket)
    assert list(node.tx_queue) == [p_a, p_b]


def _valid_set(chosen, believes):
    hops = [p.next_hop for p in chosen]
    if len(set(hops)) != len(hops):
        return False
    for p in chosen:
        for q in chosen:
            if p is q:
                continue
            if q.id not in believes.get(p.next_hop, set()):
                return False
    return True


def test_select_is_maximal_against_subset_oracle():
    rng = random.Random(31)
    for _ in range(300):
        queue = [native(i, hop=rng.randint(1, 4)) for i in range(4)]
        believes = {
            hop: {pid for pid in range(4) if rng.random() < 0.6}
            for hop in range(1, 5)
        }
        node = _coding_node(queue, believes)
        frame = select_coding_set(node, node.knowledge, slot=0, deadline=50, commit=False)
        if isinstance(frame, CodedPacket):
            ids = {s.id for s in frame.constituents}
            chosen = [p for p in queue if p.id in ids]
        else:
            chosen = [queue[0]]
        assert queue[0] in chosen
        assert _valid_set(chosen, believes)
        # greedy maximality: nothing outside the set could join it
        for p in queue:
            if p not in chosen:
                assert not _valid_set(chosen + [p], believes)


def test_pool_usefulness_window():
    node = FakeNode()
    entry = OverheardEntry(native(7, hop=1), overheard_slot=10, expiry_slot=60,
                           origin_epoch=3)
    node.pool.add(entry)
    coded = encode([native(7, hop=1), native(8, hop=2)])

    res = on_receive(node, coded, slot=40, deadline=50, reward_amount=1.5)
    assert entry.times_used == 1
    assert len(res.events) == 1
    assert res.events[0].amount == 1.5 and res.events[0].origin_epoch == 3

    res = on_receive(node, coded, slot=55, deadline=50, reward_amount=1.5)
    assert entry.times_used == 2
    assert len(res.events) == 1

    res = on_receive(node, coded, slot=61, deadline=50, reward_amount=1.5)
    assert entry.times_used == 2
    assert not res.events


def test_age_pool_reports_only_useless():
    node = FakeNode()
    useless = OverheardEntry(native(1, hop=1), 10, 60)
    used = OverheardEntry(native(2, hop=1), 10, 60, times_used=2)
    node.pool.add(useless)
    node.pool.add(used)
    assert age_pool(node, slot=60) == []
    out = age_pool(node, slot=61)
    assert out == [useless]
    assert len(node.pool) == 0


def test_age_pool_empty():
    assert age_pool(FakeNode(), slot=5) == []


def test_pool_capacity_fifo_eviction():
    pool = OverheardPool(2)
    entries = [OverheardEntry(native(i, hop=1), 0, 100) for i in range(3)]
    assert pool.add(entries[0]) is None
    assert pool.add(entries[1]) is None
    evicted = pool.add(entries[2])
    assert evicted is entries[0]
    assert len(pool) == 2 and 0 not in pool


def test_on_receive_native_caches_and_recovers():
    node = FakeNode(node_id=1)
    p = native(4, hop=1)
    res = on_receive(node, p, slot=3, deadline=50, reward_amount=1.0)
    assert res.recovered == [p]
    assert node.recv_cache[4][0] is p
    assert list(node.degree_history) == [1]


def test_on_receive_decode_failure_flagged():
    node = FakeNode(node_id=1)
    coded = encode([native(1, hop=1), native(2, hop=2)])
    res = on_receive(node, coded, slot=0, deadline=50, reward_amount=1.0)
    assert res.failed and not res.recovered
    assert list(node.degree_history) == [2]


def test_on_receive_decodes_addressed_constituent():
    node = FakeNode(node_id=2)
    p_a, p_b = native(1, hop=2), native(2, hop=3)
    node.own_cache[2] = (p_b, 0)
    res = on_receive(node, encode([p_a, p_b]), slot=1, deadline=50, reward_amount=1.0)
    assert len(res.recovered) == 1
    assert res.recovered[0].id == 1
    assert res.recovered[0].payload == p_a.payload


def test_on_overhear_pools_native_once():
    node = FakeNode()
    p = native(9, hop=1)
    on_overhear(node, p, slot=4, deadline=50, reward_amount=1.0, origin_epoch=7)
    assert 9 in node.pool
    assert node.pool.get(9).origin_epoch == 7
    assert node.pool.get(9).expiry_slot == 54
    on_overhear(node, p, slot=5, deadline=50, reward_amount=1.0, origin_epoch=8)
    assert node.pool.get(9).origin_epoch == 7  # no duplicate entry


def test_on_overhear_coded_credits_pool_without_pooling():
    node = FakeNode()
    p_a = native(1, hop=1)
    node.pool.add(OverheardEntry(p_a, 0, 50, origin_epoch=2))
    coded = encode([p_a, native(2, hop=2)])
    res = on_overhear(node, coded, slot=10, deadline=50, reward_amount=2.0,
                      origin_epoch=5)
    assert len(res.events) == 1 and res.events[0].origin_epoch == 2
    assert len(node.pool) == 1


def test_reports_and_knowledge_replacement():
    node = FakeNode(node_id=3)
    report = emit_reception_report(node, slot=0, deadline=50)
    assert report.sender == 3 and report.packet_ids == frozenset()

    node.pool.add(OverheardEntry(native(11, hop=1), 0, 50))
    node.own_cache[12] = (native(12, hop=1), 0)
    report = emit_reception_report(node, slot=1, deadline=50)
    assert report.packet_ids == {11, 12}

    table = KnowledgeTable()
    update_knowledge(table, 3, report.packet_ids, slot=1)
    assert table.holds(3, 11, slot=1, deadline=50)
    update_knowledge(table, 3, {13}, slot=2)
    assert not table.holds(3, 11, slot=2, deadline=50)
    assert table.holds(3, 13, slot=2, deadline=50)


def test_knowledge_freshness_pruning():
    table = KnowledgeTable()
    table.update(4, {1}, slot=0)
    assert table.holds(4, 1, slot=50, deadline=50)
    assert not table.holds(4, 1, slot=51, deadline=50)
    assert table.believed(4, 51, 50) == frozenset()


def test_held_ids_ages_out():
    node = FakeNode()
    node.own_cache[1] = (native(1, hop=1), 0)
    node.recv_cache[2] = (native(2, hop=1), 10)
    assert held_ids(node, slot=20, deadline=50) == {1, 2}
    assert held_ids(node, slot=55, deadline=50) == {2}
