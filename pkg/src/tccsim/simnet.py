"""Deterministic discrete-event harness for D datacenters x N partitions.

Time is integer ticks. Every delivery (message, timer, session start) is
one step; each step appends one record to the trace. Identical topology,
workload and seed give identical histories and traces.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import random
from dataclasses import dataclass, field
from typing import Any

from . import client
from .core import BOTTOM, Certificate, Event, History, Level, Operation
from .server import (
    Heartbeat,
    Partition,
    ReadReply,
    ReadRequest,
    Replicate,
    RequestTimeout,
    UpdateCSS,
    UpdateReply,
    UpdateRequest,
    message_to_json,
)
from .workload import SessionPlan

TICK_MS = 0.1


@dataclass(frozen=True)
class Topology:
    n_dcs: int = 2
    n_partitions: int = 3
    intra_dc_delay: tuple[int, int] = (2, 5)
    inter_dc_delay: tuple[int, int] = (20, 40)
    clock_skew: int = 1
    propagate_period: int = 10
    bcast_period: int = 5
    heartbeats: bool = True
    stall_bound: int = 10**6
    settle: int | None = None
    get_wait: bool = True
    put_wait: bool = True

    def validate(self) -> list[str]:
        errors = []
        if self.n_dcs < 1:
            errors.append("dcs: must be >= 1")
        if self.n_partitions < 1:
            errors.append("partitions: must be >= 1")
        for name, (lo, hi) in (("intraDcDelay", self.intra_dc_delay), ("interDcDelay", self.inter_dc_delay)):
            if lo < 1 or hi < lo:
                errors.append(f"{name}: need 1 <= min <= max, got [{lo}, {hi}]")
        if self.clock_skew < 0:
            errors.append("clockSkew: must be >= 0")
        if self.propagate_period < 1:
            errors.append("propagatePeriod: must be >= 1")
        if self.bcast_period < 1:
            errors.append("bcastPeriod: must be >= 1")
        if self.stall_bound < 1:
            errors.append("stallBound: must be >= 1")
        if self.settle is not None and self.settle < 0:
            errors.append("settle: must be >= 0")
        return errors

    @property
    def visibility_bound(self) -> int:
        """Ticks within which a quiescent system stabilizes every version."""
        return (self.inter_dc_delay[1] + self.propagate_period + self.bcast_period) * 4

    @property
    def settle_ticks(self) -> int:
        return self.settle if self.settle is not None else self.visibility_bound + self.intra_dc_delay[1]


class SimulationStall(RequestTimeout):
    """Raised when parked requests outlive the stall bound."""

    def __init__(self, now: int, report: list[str]):
        self.now = now
        self.report = report
        super().__init__(f"stalled at t={now}: " + "; ".join(report))


def partition_name(dc: int, m: int) -> str:
    return f"p{dc}.{m}"


def session_name(sid: int) -> str:
    return f"c{sid}"


@dataclass
class _Driver:
    plan: SessionPlan
    state: client.SessionState
    next_op: int = 0
    pending: tuple | None = None  # (event id, planned op, target dc, partition, issued at)
    done: bool = False


@dataclass
class SimResult:
    history: History
    trace: list[dict]
    topology: Topology
    seed: int
    quiescence_time: int
    end_time: int
    partitions: dict[tuple[int, int], Partition]
    sessions: dict[int, client.SessionState]
    skews: dict[tuple[int, int], int]
    start_time: int = 0

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.trace)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.history.to_jsonl().encode())
        h.update(self.trace_jsonl().encode())
        return h.hexdigest()


class Simulator:
    def __init__(self, topology: Topology, plans: list[SessionPlan], seed: int, think_time: int = 0):
        errors = topology.validate()
        if errors:
            raise ValueError("; ".join(errors))
        self.topo = topology
        self.seed = seed
        self.think_time = think_time
        self.rng = random.Random(f"net:{seed}")
        self.start = topology.clock_skew + 1
        self.now = self.start
        D, N = topology.n_dcs, topology.n_partitions
        self.partitions: dict[tuple[int, int], Partition] = {}
        self.skews: dict[tuple[int, int], int] = {}
        for d in range(D):
            for m in range(N):
                self.partitions[(d, m)] = Partition(
                    d, m, D, N, get_wait=topology.get_wait, put_wait=topology.put_wait
                )
                self.skews[(d, m)] = self.rng.randint(-topology.clock_skew, topology.clock_skew)
        self.drivers = {p.id: _Driver(p, client.SessionState(p.id, p.home_dc, D)) for p in plans}
        self.queue: list[tuple] = []
        self.seq = 0
        self.last_delivery: dict[tuple[str, str], int] = {}
        self.trace: list[dict] = []
        self.events: list[Event] = []
        self.applied_at: dict[int, tuple[int, int]] = {}
        self.op_session: dict[int, int] = {}
        self.next_event_id = 0
        self.end_time: int | None = None
        self.quiescence: int | None = None
        self._wake_at: dict[tuple[int, int], int] = {}

    # clocks and channels

    def clock_of(self, where: tuple[int, int], now: int | None = None) -> int:
        return (self.now if now is None else now) + self.skews[where]

    def _push(self, at: int, kind: str, target: Any, payload: Any = None, src: str = "") -> None:
        self.seq += 1
        heapq.heappush(self.queue, (at, self.seq, kind, target, src, payload))

    def _draw(self, src_dc: int, dst_dc: int) -> int:
        lo, hi = self.topo.intra_dc_delay if src_dc == dst_dc else self.topo.inter_dc_delay
        return self.rng.randint(lo, hi)

    def send_fifo(self, src: str, dst: str, draw: int, target: Any, msg: Any, out: list) -> int:
        """Schedule delivery, never overtaking an earlier send on the same channel."""
        channel = (src, dst)
        at = self.now + draw
        last = self.last_delivery.get(channel)
        if last is not None and at <= last:
            at = last + 1
        self.last_delivery[channel] = at
        self._push(at, "msg", target, msg, src)
        entry = {"dst": dst, "at": at, "type": type(msg).__name__}
        op = getattr(msg, "op", None)
        if op is not None:
            entry["op"] = op
        out.append(entry)
        return at

    # main loop

    def run(self) -> SimResult:
        for (d, m) in sorted(self.partitions):
            self._push(self.start + self.rng.randrange(self.topo.propagate_period), "propagate", (d, m))
            self._push(self.start + self.rng.randrange(self.topo.bcast_period), "bcast", (d, m))
        for sid in sorted(self.drivers):
            self._push(self.start + self.rng.randrange(5), "start", sid)
        if not self.drivers:
            self._quiesce(self.start)

        while self.queue:
            at, seq, kind, target, src, payload = heapq.heappop(self.queue)
            if self.end_time is not None and at > self.end_time:
                break
            self.now = at
            if kind == "stallcheck":
                self._stallcheck(target, payload)
            elif isinstance(target, tuple):
                self._step_partition(seq, kind, target, src, payload)
            else:
                self._step_session(seq, kind, target, src, payload)

        history = History.from_events(self.events)
        return SimResult(
            history=history,
            trace=self.trace,
            topology=self.topo,
            seed=self.seed,
            quiescence_time=self.quiescence if self.quiescence is not None else self.now,
            end_time=self.end_time if self.end_time is not None else self.now,
            partitions=self.partitions,
            sessions={sid: d.state for sid, d in self.drivers.items()},
            skews=self.skews,
            start_time=self.start,
        )

    def _quiesce(self, now: int) -> None:
        self.quiescence = now
        self.end_time = now + self.topo.settle_ticks

    def _reschedule(self, kind: str, where: tuple[int, int], period: int) -> None:
        at = self.now + period
        if self.end_time is None or at <= self.end_time:
            self._push(at, kind, where)

    def _stallcheck(self, where: tuple[int, int], op: int) -> None:
        p = self.partitions[where]
        if any(pk.request.op == op for pk in p.parked):
            report = []
            for q in self.partitions.values():
                clock = self.clock_of((q.dc, q.index))
                report.extend(pk.describe(q, clock) for pk in q.stalled(self.now, self.topo.stall_bound))
            raise SimulationStall(self.now, report)

    def _step_partition(self, seq: int, kind: str, where: tuple[int, int], src: str, payload: Any) -> None:
        p = self.partitions[where]
        name = partition_name(*where)
        clock = self.clock_of(where)
        out: list[dict] = []
        record: dict = {"t": self.now, "seq": seq, "src": src or kind, "dst": name, "kind": kind}
        d, m = where
        if kind == "msg":
            record["msg"] = message_to_json(payload)
            if isinstance(payload, ReadRequest):
                reply = p.handle_read(payload, clock, self.now)
                if reply is not None:
                    self._reply(where, reply, out)
                else:
                    self._push(self.now + self.topo.stall_bound + 1, "stallcheck", where, payload.op)
            elif isinstance(payload, UpdateRequest):
                reply = p.handle_update(payload, clock, self.now)
                if reply is not None:
                    self._reply(where, reply, out)
                else:
                    self._push(self.now + self.topo.stall_bound + 1, "stallcheck", where, payload.op)
            elif isinstance(payload, Replicate):
                p.handle_replicate(payload)
            elif isinstance(payload, Heartbeat):
                p.handle_heartbeat(payload)
            elif isinstance(payload, UpdateCSS):
                p.handle_update_css(payload)
            else:
                raise TypeError(f"unexpected message {payload!r}")
        elif kind == "propagate":
            for dc, msg in p.propagate(clock):
                if isinstance(msg, Heartbeat) and not self.topo.heartbeats:
                    continue
                self.send_fifo(name, partition_name(dc, m), self._draw(d, dc), (dc, m), msg, out)
            self._reschedule("propagate", where, self.topo.propagate_period)
        elif kind == "bcast":
            for i, msg in p.bcast():
                self.send_fifo(name, partition_name(d, i), self._draw(d, d), (d, i), msg, out)
            self._reschedule("bcast", where, self.topo.bcast_period)
        elif kind == "wake":
            self._wake_at.pop(where, None)
        else:
            raise ValueError(f"unknown step kind {kind!r}")

        for reply in p.wake(clock):
            self._reply(where, reply, out)
        due = p.next_update_wake()
        if due is not None:
            at = due - self.skews[where]
            if self._wake_at.get(where) != at:
                self._wake_at[where] = at
                self._push(at, "wake", where)

        record["clock"] = clock
        record["pvc"] = p.pvc.to_list()
        record["css"] = p.css.to_list()
        added = p.drain_added()
        if added:
            record["added"] = [v.to_json() for v in added]
        if out:
            record["out"] = out
        self.trace.append(record)

    def _reply(self, where: tuple[int, int], reply: ReadReply | UpdateReply, out: list) -> None:
        sid = self.op_session[reply.op]
        self.applied_at[reply.op] = (self.now, len(self.applied_at))
        home = self.drivers[sid].plan.home_dc
        self.send_fifo(partition_name(*where), session_name(sid), self._draw(where[0], home), sid, reply, out)

    def _step_session(self, seq: int, kind: str, sid: int, src: str, payload: Any) -> None:
        drv = self.drivers[sid]
        out: list[dict] = []
        record: dict = {"t": self.now, "seq": seq, "src": src or kind, "dst": session_name(sid), "kind": kind}
        if kind == "msg":
            record["msg"] = message_to_json(payload)
            self._complete(drv, payload)
            if self.think_time:
                self._push(self.now + self.think_time, "issue", drv.plan.id)
            else:
                self._issue(drv, record, out)
        elif kind in ("start", "issue"):
            self._issue(drv, record, out)
        else:
            raise ValueError(f"unknown step kind {kind!r}")
        record["state"] = drv.state.snapshot()
        if out:
            record["out"] = out
        self.trace.append(record)

    def _complete(self, drv: _Driver, reply: ReadReply | UpdateReply) -> None:
        eid, planned, dc, part, issued = drv.pending
        if reply.op != eid:
            raise RuntimeError(f"session {drv.plan.id} got reply for op {reply.op}, expected {eid}")
        applied, applied_seq = self.applied_at[eid]
        if isinstance(reply, ReadReply):
            value = client.complete_get(drv.state, reply)
            op = Operation.read(planned.key)
            cert = Certificate(reply.vc, reply.gsvc, dc, part, applied, applied_seq)
            rval: Any = value
        else:
            client.complete_put(drv.state, reply)
            op = Operation.write(planned.key, planned.value)
            cert = Certificate(reply.vc, None, dc, part, applied, applied_seq)
            rval = BOTTOM
        self.events.append(Event(eid, drv.plan.id, op, planned.level, rval, issued, self.now, cert))
        drv.pending = None

    def _issue(self, drv: _Driver, record: dict, out: list) -> None:
        if drv.next_op >= len(drv.plan.ops):
            if not drv.done:
                drv.done = True
                if all(x.done for x in self.drivers.values()):
                    self._quiesce(self.now)
            return
        planned = drv.plan.ops[drv.next_op]
        drv.next_op += 1
        eid = self.next_event_id
        self.next_event_id += 1
        self.op_session[eid] = drv.plan.id
        dc = planned.target_dc
        part = client.partition_of(planned.key, self.topo.n_partitions)
        if planned.kind == "read":
            msg: Any = client.begin_get(drv.state, eid, planned.key, planned.level)
        else:
            msg = client.begin_put(drv.state, eid, planned.key, planned.value, planned.level)
        drv.pending = (eid, planned, dc, part, self.now)
        record["issue"] = {
            "op": eid,
            "kind": planned.kind,
            "key": planned.key,
            "level": planned.level.value,
            "dc": dc,
            "home": drv.plan.home_dc,
            "partition": part,
            "remote": dc != drv.plan.home_dc,
        }
        self.send_fifo(
            session_name(drv.plan.id),
            partition_name(dc, part),
            self._draw(drv.plan.home_dc, dc),
            (dc, part),
            msg,
            out,
        )


def run(topology: Topology, plans: list[SessionPlan], seed: int, think_time: int = 0) -> SimResult:
    """Execute every session to completion, then let the system settle."""
    return Simulator(topology, plans, seed, think_time).run()
