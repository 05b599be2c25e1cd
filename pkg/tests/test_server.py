import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tccsim.core import VectorClock
from tccsim.server import (
    Heartbeat,
    Partition,
    ReadReply,
    ReadRequest,
    Replicate,
    UpdateCSS,
    UpdateReply,
    UpdateRequest,
    Version,
    latest_stable,
    message_from_json,
    message_to_json,
)

VC = VectorClock.of
Z = VC(0, 0)


def part(dc=0, index=0, n_dcs=2, n_partitions=1):
    return Partition(dc, index, n_dcs, n_partitions)


def force_css(p, css):
    p.css = css


class TestLatestStable:
    def test_arbitration_by_stamp(self):
        a = Version("k", 1, VC(2, 0), 0)
        b = Version("k", 2, VC(0, 3), 1)
        assert latest_stable([a, b], VC(5, 5)) is b

    def test_tie_goes_to_higher_origin(self):
        a = Version("k", 1, VC(4, 0), 0)
        b = Version("k", 2, VC(0, 4), 1)
        assert latest_stable([b, a], VC(5, 5)) is b

    def test_nothing_stable_at_zero(self):
        assert latest_stable([Version("k", 1, VC(1, 0), 0)], Z) is None


class TestReads:
    def test_serves_latest_stable(self):
        p = part()
        p._insert(Version("k", 3, VC(2, 1), 0))
        force_css(p, VC(5, 5))
        assert p.handle_read(ReadRequest(0, "k", Z, Z), clock=10) == ReadReply(0, 3, VC(2, 1), VC(5, 5))

    def test_parks_until_css_covers_dependencies(self):
        p = part()
        force_css(p, VC(3, 5))
        assert p.handle_read(ReadRequest(0, "k", Z, VC(4, 0)), clock=10) is None
        assert p.wake(11) == []
        force_css(p, VC(4, 5))
        assert p.wake(12) == [ReadReply(0, 0, Z, VC(4, 5))]
        assert p.parked == []

    def test_initial_value(self):
        p = part()
        force_css(p, VC(7, 1))
        assert p.handle_read(ReadRequest(0, "nope", Z, Z), clock=1) == ReadReply(0, 0, Z, VC(7, 1))


class TestUpdates:
    def test_waits_for_clock_to_pass_dependency(self):
        p = part()
        assert p.handle_update(UpdateRequest(0, "k", 1, VC(5, 0)), clock=3) is None
        assert p.next_update_wake() == 6
        assert p.wake(5) == []
        assert p.wake(6) == [UpdateReply(0, VC(6, 0))]
        assert p.pvc[0] == 6

    def test_immediate_when_clock_ahead(self):
        p = part()
        assert p.handle_update(UpdateRequest(0, "k", 1, Z), clock=7) == UpdateReply(0, VC(7, 0))

    def test_sequential_puts_strictly_increase(self):
        p = part()
        first = p.handle_update(UpdateRequest(0, "k", 1, Z), clock=7)
        # a second put in the same tick waits for the clock to move on
        assert p.handle_update(UpdateRequest(1, "k", 2, Z), clock=7) is None
        (second,) = p.wake(8)
        assert second.vc[0] > first.vc[0]

    def test_clock_cannot_go_backwards(self):
        p = part()
        p.handle_update(UpdateRequest(0, "k", 1, Z), clock=7)
        with pytest.raises(ValueError):
            p.handle_read(ReadRequest(1, "k", Z, Z), clock=6)


class TestReplication:
    def test_propagate_ships_updates_in_timestamp_order(self):
        p = part()
        v2 = Version("k", 2, VC(5, 0), 0)
        v1 = Version("j", 1, VC(3, 0), 0)
        p.updates = [v2, v1]
        out = p.propagate(clock=9)
        assert out == [(1, Replicate(0, "j", 1, VC(3, 0))), (1, Replicate(0, "k", 2, VC(5, 0)))]
        assert p.updates == [] and p.pvc[0] == 9

    def test_propagate_heartbeat_when_idle(self):
        p = Partition(1, 0, 3, 1)
        assert p.propagate(clock=4) == [(0, Heartbeat(1, 4)), (2, Heartbeat(1, 4))]

    def test_single_dc_sends_nothing(self):
        assert Partition(0, 0, 1, 1).propagate(clock=4) == []

    def test_heartbeat_sets_entry(self):
        p = part()
        p.pvc = VC(7, 2)
        p.handle_heartbeat(Heartbeat(1, 9))
        assert p.pvc == VC(7, 9)
        p.handle_heartbeat(Heartbeat(1, 9))
        assert p.pvc == VC(7, 9)

    def test_replicated_version_readable_once_stable(self):
        p = part(dc=0)
        p.handle_replicate(Replicate(1, "k", 8, VC(0, 4)))
        assert p.pvc[1] == 4
        force_css(p, VC(9, 3))
        assert p.handle_read(ReadRequest(0, "k", Z, Z), clock=10).value == 0
        force_css(p, VC(9, 4))
        assert p.handle_read(ReadRequest(1, "k", Z, Z), clock=11).value == 8

    def test_duplicate_replicate_is_ignored(self):
        p = part()
        msg = Replicate(1, "k", 8, VC(0, 4))
        assert p.handle_replicate(msg) is True
        assert p.handle_replicate(msg) is False
        assert len(p.versions()) == 1


class TestStabilization:
    def test_css_is_columnwise_min(self):
        p = Partition(0, 0, 2, 2)
        p.pvc = VC(3, 4)
        p.handle_update_css(UpdateCSS(1, VC(5, 2)))
        assert p.css == VC(3, 2)

    def test_single_partition_css_is_own_pvc(self):
        p = Partition(0, 0, 2, 1)
        p.pvc = VC(6, 2)
        assert p.bcast() == []
        assert p.css == VC(6, 2)

    def test_bcast_targets_every_sibling(self):
        p = Partition(1, 2, 2, 4)
        p.pvc = VC(1, 1)
        assert [i for i, _ in p.bcast()] == [0, 1, 3]

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 1), st.integers(1, 5)), max_size=30))
    def test_css_never_decreases_with_monotone_senders(self, steps):
        p = Partition(0, 0, 2, 3)
        rows = {1: [0, 0], 2: [0, 0]}
        last = p.css
        for who, col, inc in steps:
            if who == 0:
                p.pvc = p.pvc.with_entry(col, p.pvc[col] + inc)
                p.recompute_css()
            else:
                rows[who][col] += inc
                p.handle_update_css(UpdateCSS(who, VectorClock(tuple(rows[who]))))
            assert last.leq(p.css)
            last = p.css


def test_message_json_roundtrip():
    msgs = [
        ReadRequest(1, "k", VC(1, 2), VC(3, 4)),
        ReadReply(1, 5, VC(1, 0), VC(2, 2)),
        UpdateRequest(2, "k", 6, VC(0, 1)),
        UpdateReply(2, VC(7, 1)),
        Replicate(0, "k", 6, VC(7, 1)),
        Heartbeat(1, 12),
        UpdateCSS(2, VC(3, 3)),
    ]
    for m in msgs:
        assert message_from_json(message_to_json(m)) == m
