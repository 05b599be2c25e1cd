"""Set-based session-guarantee checks replayed from a trace.

``cwrites(c, t)`` are the session's puts completed by ``t``, ``creads(c, t)``
the puts it has read from by ``t``, and ``swrites(s, t)`` the puts stored in
partition s's datacenter and covered by s's css at ``t``. Each is kept as a
list of (time, set) steps so lookups are a bisection.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable

from ..core import History, VectorClock
from .certificate import certificates_from_trace
from .execution import Verdict, Violation, monotonic_reads, monotonic_writes, sees_own_writes


@dataclass
class _Steps:
    times: list[int] = field(default_factory=list)
    sets: list[frozenset[int]] = field(default_factory=list)

    def push(self, t: int, s: frozenset[int]) -> None:
        if self.times and self.times[-1] == t:
            self.sets[-1] = s
        else:
            self.times.append(t)
            self.sets.append(s)

    def at(self, t: int) -> frozenset[int]:
        i = bisect.bisect_right(self.times, t)
        return self.sets[i - 1] if i else frozenset()


@dataclass
class OperationalSets:
    cw: dict[int, _Steps]
    cr: dict[int, _Steps]
    sw: dict[str, _Steps]

    def cwrites(self, session: int, t: int) -> frozenset[int]:
        return self.cw[session].at(t) if session in self.cw else frozenset()

    def creads(self, session: int, t: int) -> frozenset[int]:
        return self.cr[session].at(t) if session in self.cr else frozenset()

    def swrites(self, partition: str, t: int) -> frozenset[int]:
        return self.sw[partition].at(t) if partition in self.sw else frozenset()

    def swrites_final(self, partition: str) -> frozenset[int]:
        steps = self.sw.get(partition)
        return steps.sets[-1] if steps and steps.sets else frozenset()


def operational_sets(h: History, trace: Iterable[dict]) -> OperationalSets:
    trace = list(trace)
    certs = certificates_from_trace(trace)
    write_of = {(w.key, w.op.value): w.id for w in h.writes}
    by_ts = {(w.key, certs[w.id][0]): w.id for w in h.writes if w.id in certs}

    cw: dict[int, _Steps] = {}
    cr: dict[int, _Steps] = {}
    for s, eids in h.sessions.items():
        writes: set[int] = set()
        read: set[int] = set()
        cw[s], cr[s] = _Steps(), _Steps()
        for eid in eids:
            e = h.event(eid)
            if e.is_write:
                writes.add(eid)
                cw[s].push(e.return_time, frozenset(writes))
            elif eid in certs and not certs[eid][0].is_zero():
                src = by_ts.get((e.key, certs[eid][0]))
                if src is not None:
                    read.add(src)
                    cr[s].push(e.return_time, frozenset(read))

    # a put is known to s once some partition of s's datacenter stores it
    sw: dict[str, _Steps] = {}
    present: dict[str, dict[int, VectorClock]] = {}
    for rec in trace:
        name = rec["dst"]
        if not name.startswith("p"):
            continue
        store = present.setdefault(name.split(".")[0], {})
        for key, value, vc, _origin in rec.get("added", ()):
            wid = write_of.get((key, value))
            if wid is not None:
                store[wid] = VectorClock(tuple(vc))
        css = VectorClock(tuple(rec["css"]))
        stable = frozenset(w for w, vc in store.items() if vc.leq(css))
        sw.setdefault(name, _Steps()).push(rec["t"], stable)
    return OperationalSets(cw, cr, sw)


def check_operational(h: History, trace: Iterable[dict]) -> Verdict:
    """Set-inclusion forms of the read guarantees and the write ordering.

    A read served at partition s at time t' must see, in swrites(s, t'),
    every put the session wrote (ryw) or read from (mr) before it was
    invoked. A monotonic write must not be timestamped below any earlier
    put of the session, and must eventually be stable at its partition.
    """
    trace = list(trace)
    sets = operational_sets(h, trace)
    certs = certificates_from_trace(trace)
    for e in sorted(h.events, key=lambda e: (e.meta.applied_at, e.meta.applied_seq, e.id) if e.meta else (0, 0, e.id)):
        if e.meta is None:
            continue
        where = f"p{e.meta.dc}.{e.meta.partition}"
        served = sets.swrites(where, e.meta.applied_at)
        if e.is_read and sees_own_writes(e.level):
            missing = sets.cwrites(e.session, e.invoke_time) - served
            if missing:
                return Verdict("violated", "operational", violation=Violation("ryw", tuple(sorted(missing)) + (e.id,)))
        if e.is_read and monotonic_reads(e.level):
            missing = sets.creads(e.session, e.invoke_time) - served
            if missing:
                return Verdict("violated", "operational", violation=Violation("mr", tuple(sorted(missing)) + (e.id,)))
        if e.is_write and monotonic_writes(e.level):
            vc_p = certs[e.id][0]
            for w in sets.cwrites(e.session, e.invoke_time):
                if vc_p.lt(certs[w][0]):
                    return Verdict("violated", "operational", violation=Violation("mw", (w, e.id)))
            if e.id not in sets.swrites_final(where):
                return Verdict("violated", "operational", violation=Violation("mw", (e.id,), "never stable"))
    return Verdict("satisfied", "operational")
