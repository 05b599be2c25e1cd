"""Vector clocks, consistency levels, and the history model.

Everything here is an immutable value type. Histories are what the
simulator records and what the checkers consume; they round-trip through
JSON-lines (one event object per line).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence


class Level(str, Enum):
    EC = "EC"
    RYW = "RYW"
    MR = "MR"
    MW = "MW"
    WFR = "WFR"
    CC = "CC"


READ_LEVELS = frozenset({Level.EC, Level.RYW, Level.MR, Level.CC})
WRITE_LEVELS = frozenset({Level.EC, Level.MW, Level.WFR, Level.CC})


class _Bottom:
    """The unit result of a write. Never equal to any integer."""

    _instance: _Bottom | None = None

    def __new__(cls) -> _Bottom:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


@dataclass(frozen=True)
class VectorClock:
    """One non-negative timestamp per datacenter."""

    entries: tuple[int, ...]

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("vector clock needs at least one entry")
        for x in entries:
            if isinstance(x, bool) or not isinstance(x, int) or x < 0:
                raise ValueError(f"vector clock entries must be non-negative ints, got {entries!r}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zero(cls, dim: int) -> VectorClock:
        return cls((0,) * dim)

    @classmethod
    def of(cls, *entries: int) -> VectorClock:
        return cls(tuple(entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> int:
        return self.entries[i]

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __repr__(self) -> str:
        return f"VC{list(self.entries)}"

    def _check_dim(self, other: VectorClock) -> None:
        if len(self.entries) != len(other.entries):
            raise ValueError(f"dimension mismatch: {len(self.entries)} vs {len(other.entries)}")

    def leq(self, other: VectorClock) -> bool:
        self._check_dim(other)
        return all(a <= b for a, b in zip(self.entries, other.entries))

    def lt(self, other: VectorClock) -> bool:
        return self.leq(other) and self.entries != other.entries

    def merge(self, other: VectorClock) -> VectorClock:
        self._check_dim(other)
        return VectorClock(tuple(max(a, b) for a, b in zip(self.entries, other.entries)))

    def with_entry(self, i: int, value: int) -> VectorClock:
        entries = list(self.entries)
        entries[i] = value
        return VectorClock(tuple(entries))

    def is_zero(self) -> bool:
        return not any(self.entries)

    def to_list(self) -> list[int]:
        return list(self.entries)


def vc_leq(a: VectorClock, b: VectorClock) -> bool:
    return a.leq(b)


def vc_lt(a: VectorClock, b: VectorClock) -> bool:
    return a.lt(b)


def vc_merge(a: VectorClock, b: VectorClock) -> VectorClock:
    return a.merge(b)


@dataclass(frozen=True)
class Operation:
    kind: str  # "read" | "write"
    key: str
    value: int | None = None

    def __post_init__(self) -> None:
        if self.kind == "read":
            if self.value is not None:
                raise ValueError("reads carry no value")
        elif self.kind == "write":
            if isinstance(self.value, bool) or not isinstance(self.value, int):
                raise ValueError("writes carry an integer value")
        else:
            raise ValueError(f"unknown operation kind {self.kind!r}")

    @classmethod
    def read(cls, key: str) -> Operation:
        return cls("read", key)

    @classmethod
    def write(cls, key: str, value: int) -> Operation:
        return cls("write", key, value)

    @property
    def is_read(self) -> bool:
        return self.kind == "read"

    @property
    def is_write(self) -> bool:
        return self.kind == "write"

    def __repr__(self) -> str:
        if self.is_read:
            return f"{self.key}.rd"
        return f"{self.key}.wr({self.value})"


def eval_register(prefix: Sequence[Operation], op: Operation) -> int | _Bottom:
    """Sequential semantics of a map of integer registers.

    A read returns the value of the last write to its key in ``prefix``,
    or 0 if there is none. Writes return ⊥.
    """
    if op.is_write:
        return BOTTOM
    for prior in reversed(prefix):
        if prior.is_write and prior.key == op.key:
            return prior.value
    return 0


@dataclass(frozen=True)
class Certificate:
    """Protocol metadata attached to a completed operation.

    For a read, ``vc`` is the returned version's timestamp and ``gsvc``
    the partition's stable vector at return. For a write, ``vc`` is the
    assigned update timestamp and ``gsvc`` is None.
    """

    vc: VectorClock
    gsvc: VectorClock | None = None
    dc: int = 0
    partition: int = 0
    applied_at: int = 0
    # global order in which servers applied operations; breaks ties in applied_at
    applied_seq: int = 0

    def to_json(self) -> dict:
        out = {
            "vc": self.vc.to_list(),
            "dc": self.dc,
            "partition": self.partition,
            "applied_at": self.applied_at,
            "applied_seq": self.applied_seq,
        }
        if self.gsvc is not None:
            out["gsvc"] = self.gsvc.to_list()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> Certificate:
        gsvc = obj.get("gsvc")
        return cls(
            vc=VectorClock(tuple(obj["vc"])),
            gsvc=VectorClock(tuple(gsvc)) if gsvc is not None else None,
            dc=obj.get("dc", 0),
            partition=obj.get("partition", 0),
            applied_at=obj.get("applied_at", 0),
            applied_seq=obj.get("applied_seq", 0),
        )


@dataclass(frozen=True)
class Event:
    id: int
    session: int
    op: Operation
    level: Level
    rval: int | _Bottom
    invoke_time: int = 0
    return_time: int = 0
    meta: Certificate | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "level", Level(self.level))
        if self.op.is_read:
            if self.level not in READ_LEVELS:
                raise ValueError(f"event {self.id}: {self.level.value} is not a read level")
            if self.rval is BOTTOM or isinstance(self.rval, bool) or not isinstance(self.rval, int):
                raise ValueError(f"event {self.id}: reads return integers")
        else:
            if self.level not in WRITE_LEVELS:
                raise ValueError(f"event {self.id}: {self.level.value} is not a write level")
            if self.rval is not BOTTOM:
                raise ValueError(f"event {self.id}: writes return ⊥")
        if self.invoke_time > self.return_time:
            raise ValueError(f"event {self.id}: returns before it is invoked")

    @property
    def key(self) -> str:
        return self.op.key

    @property
    def is_read(self) -> bool:
        return self.op.is_read

    @property
    def is_write(self) -> bool:
        return self.op.is_write

    def __repr__(self) -> str:
        lvl = self.level.value.lower()
        if self.is_read:
            return f"e{self.id}:{self.key}.rd({lvl})▷{self.rval}"
        return f"e{self.id}:{self.key}.wr({self.op.value},{lvl})"

    def to_json(self) -> dict:
        out: dict = {
            "id": self.id,
            "session": self.session,
            "op": self.op.kind,
            "key": self.op.key,
            "level": self.level.value,
            "rval": None if self.rval is BOTTOM else self.rval,
            "invoke": self.invoke_time,
            "return": self.return_time,
        }
        if self.op.is_write:
            out["value"] = self.op.value
        if self.meta is not None:
            out["cert"] = self.meta.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> Event:
        if obj["op"] == "read":
            op = Operation.read(obj["key"])
            rval = obj["rval"]
        else:
            op = Operation.write(obj["key"], obj["value"])
            rval = BOTTOM
        cert = obj.get("cert")
        return cls(
            id=obj["id"],
            session=obj["session"],
            op=op,
            level=Level(obj["level"]),
            rval=rval,
            invoke_time=obj.get("invoke", 0),
            return_time=obj.get("return", 0),
            meta=Certificate.from_json(cert) if cert is not None else None,
        )


@dataclass(frozen=True)
class History:
    """Events plus per-session order.

    ``sessions`` maps a session id to its event ids in invocation order;
    session order is the union of those sequences.
    """

    events: tuple[Event, ...]
    sessions: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        events = tuple(sorted(self.events, key=lambda e: e.id))
        ids = [e.id for e in events]
        if len(set(ids)) != len(ids):
            raise ValueError("event ids must be unique")
        object.__setattr__(self, "events", events)
        by_id = {e.id: e for e in events}
        sessions = {s: tuple(order) for s, order in self.sessions.items()}
        seen: set[int] = set()
        for s, order in sessions.items():
            for eid in order:
                if eid not in by_id:
                    raise ValueError(f"session {s} lists unknown event {eid}")
                if by_id[eid].session != s:
                    raise ValueError(f"event {eid} listed under session {s}")
                if eid in seen:
                    raise ValueError(f"event {eid} appears twice in session order")
                seen.add(eid)
        if seen != set(ids):
            raise ValueError("every event must appear in exactly one session sequence")
        object.__setattr__(self, "sessions", sessions)
        position = {}
        for s, order in sessions.items():
            for i, eid in enumerate(order):
                position[eid] = (s, i)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_position", position)

    @classmethod
    def from_events(cls, events: Iterable[Event]) -> History:
        """Build a history whose session order follows event ids."""
        events = sorted(events, key=lambda e: e.id)
        sessions: dict[int, list[int]] = {}
        for e in events:
            sessions.setdefault(e.session, []).append(e.id)
        return cls(tuple(events), {s: tuple(v) for s, v in sessions.items()})

    def __len__(self) -> int:
        return len(self.events)

    def event(self, eid: int) -> Event:
        return self._by_id[eid]

    @property
    def reads(self) -> list[Event]:
        return [e for e in self.events if e.is_read]

    @property
    def writes(self) -> list[Event]:
        return [e for e in self.events if e.is_write]

    def writes_to(self, key: str) -> list[Event]:
        return [e for e in self.events if e.is_write and e.key == key]

    def so(self, a: int, b: int) -> bool:
        """True iff event ``a`` precedes event ``b`` in session order."""
        sa, ia = self._position[a]
        sb, ib = self._position[b]
        return sa == sb and ia < ib

    def so_before(self, eid: int) -> tuple[int, ...]:
        s, i = self._position[eid]
        return self.sessions[s][:i]

    def so_pairs(self) -> set[tuple[int, int]]:
        pairs = set()
        for order in self.sessions.values():
            for i, a in enumerate(order):
                for b in order[i + 1 :]:
                    pairs.add((a, b))
        return pairs

    def restrict(self, level: Level) -> History:
        """All writes plus the reads carrying ``level``."""
        level = Level(level)
        keep = {e.id for e in self.events if e.is_write or e.level == level}
        return self.subset(keep)

    def subset(self, keep: Iterable[int]) -> History:
        keep = set(keep)
        events = tuple(e for e in self.events if e.id in keep)
        sessions = {}
        for s, order in self.sessions.items():
            kept = tuple(eid for eid in order if eid in keep)
            if kept:
                sessions[s] = kept
        return History(events, sessions)

    def truncate(self, n: int) -> History:
        """First ``n`` events in the order they took effect at a server.

        Falls back to event id when certificates are absent. The result is
        closed under session order and reads-from for simulator histories.
        """

        def applied(e: Event) -> tuple[int, int, int]:
            if e.meta is None:
                return (0, 0, e.id)
            return (e.meta.applied_at, e.meta.applied_seq, e.id)

        ordered = sorted(self.events, key=applied)
        return self.subset(e.id for e in ordered[:n])

    def is_differentiated(self) -> bool:
        seen = set()
        for e in self.writes:
            if (e.key, e.op.value) in seen:
                return False
            seen.add((e.key, e.op.value))
        return True

    def to_jsonl(self) -> str:
        lines = []
        for s in sorted(self.sessions):
            for i, eid in enumerate(self.sessions[s]):
                obj = self.event(eid).to_json()
                obj["seq"] = i
                lines.append(json.dumps(obj, sort_keys=True))
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_jsonl(cls, text: str) -> History:
        events = []
        order: dict[int, list[tuple[int, int]]] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                e = Event.from_json(obj)
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"history line {lineno}: {exc}") from exc
            events.append(e)
            order.setdefault(e.session, []).append((obj.get("seq", e.id), e.id))
        sessions = {s: tuple(eid for _, eid in sorted(v)) for s, v in order.items()}
        return cls(tuple(events), sessions)
