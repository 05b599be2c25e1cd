"""Session-guarantee checks over protocol metadata.

Each event carries the vector clocks the protocol attached to it: for a
read, the version's vc and the stable vector gsvc it was served under; for
a write, its assigned timestamp. The checks are vector-clock conditions for
each guarantee, evaluated per event in application order.
"""

from __future__ import annotations

from typing import Iterable

from ..core import Event, History, VectorClock
from .execution import (
    Verdict,
    Violation,
    monotonic_reads,
    monotonic_writes,
    sees_own_writes,
    writes_follow_reads,
)


class MalformedHistory(ValueError):
    pass


Cert = tuple[VectorClock, VectorClock | None]


def certificates_from_trace(trace: Iterable[dict]) -> dict[int, Cert]:
    """Read (vc, gsvc) per op from the reply messages delivered to sessions."""
    out: dict[int, Cert] = {}
    for rec in trace:
        msg = rec.get("msg")
        if not msg or not rec["dst"].startswith("c"):
            continue
        if msg["type"] == "ReadReply":
            out[msg["op"]] = (VectorClock(tuple(msg["vc"])), VectorClock(tuple(msg["gsvc"])))
        elif msg["type"] == "UpdateReply":
            out[msg["op"]] = (VectorClock(tuple(msg["vc"])), None)
    return out


def _certs(h: History, trace: Iterable[dict] | None) -> dict[int, Cert]:
    from_trace = certificates_from_trace(trace) if trace is not None else {}
    certs: dict[int, Cert] = {}
    for e in h.events:
        if e.id in from_trace:
            certs[e.id] = from_trace[e.id]
        elif trace is None and e.meta is not None:
            certs[e.id] = (e.meta.vc, e.meta.gsvc)
        else:
            raise MalformedHistory(f"event {e.id} has no certificate")
        vc, gsvc = certs[e.id]
        if e.is_read and gsvc is None:
            raise MalformedHistory(f"read {e.id} certificate lacks gsvc")
    return certs


def _order(h: History) -> list[Event]:
    def key(e: Event) -> tuple[int, int, int]:
        if e.meta is None:
            return (e.return_time, 0, e.id)
        return (e.meta.applied_at, e.meta.applied_seq, e.id)

    return sorted(h.events, key=key)


def event_violation(h: History, e: Event, certs: dict[int, Cert]) -> Violation | None:
    """First failing check for ``e`` given its session prefix, or None."""
    vc_e, gsvc_e = certs[e.id]
    before = [h.event(x) for x in h.so_before(e.id)]
    prior_writes = [(x.id, certs[x.id][0]) for x in before if x.is_write]
    prior_reads = [(x.id, certs[x.id][0]) for x in before if x.is_read and not certs[x.id][0].is_zero()]

    if e.is_read:
        if sees_own_writes(e.level):
            for wid, dvc in prior_writes:
                if not dvc.leq(gsvc_e):
                    return Violation("ryw", (wid, e.id), f"dvc {dvc.to_list()} not <= gsvc {gsvc_e.to_list()}")
        if monotonic_reads(e.level):
            for rid, vc in prior_reads:
                if not vc.leq(gsvc_e):
                    return Violation("mr", (rid, e.id), f"read vc {vc.to_list()} not <= gsvc {gsvc_e.to_list()}")
        if not vc_e.is_zero() and not vc_e.leq(gsvc_e):
            return Violation("stable", (e.id,), f"version {vc_e.to_list()} not <= gsvc {gsvc_e.to_list()}")
        if vc_e.is_zero():
            if e.rval != 0:
                return Violation("rval", (e.id,), "initial version but nonzero value")
        else:
            source = [w for w in h.writes_to(e.key) if certs[w.id][0] == vc_e]
            if not source or source[0].op.value != e.rval:
                return Violation("rval", (e.id,), f"no write of {e.rval} with timestamp {vc_e.to_list()}")
    else:
        if monotonic_writes(e.level):
            for wid, dvc in prior_writes:
                if not dvc.lt(vc_e):
                    return Violation("mw", (wid, e.id), f"dvc {dvc.to_list()} not < {vc_e.to_list()}")
        if writes_follow_reads(e.level):
            for rid, vc in prior_reads:
                if not vc.lt(vc_e):
                    return Violation("wfr", (rid, e.id), f"read vc {vc.to_list()} not < {vc_e.to_list()}")
    return None


def check_certificate(h: History, trace: Iterable[dict] | None = None) -> Verdict:
    """Check every event's certificate; report the first violation in apply order.

    With ``trace``, certificates are taken from the reply messages it
    records instead of the history's embedded copies.
    """
    certs = _certs(h, list(trace) if trace is not None else None)
    for e in _order(h):
        v = event_violation(h, e, certs)
        if v is not None:
            return Verdict("violated", "certificate", violation=v)
    return Verdict("satisfied", "certificate")


def all_violations(h: History, trace: Iterable[dict] | None = None) -> list[Violation]:
    certs = _certs(h, list(trace) if trace is not None else None)
    return [v for e in _order(h) if (v := event_violation(h, e, certs)) is not None]
