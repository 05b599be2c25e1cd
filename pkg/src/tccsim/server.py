"""Partition state machine: read/update handling, replication, stabilization.

Handlers are driven by the simulator one message at a time. Each takes the
partition's current physical clock reading as an argument instead of
consulting a global clock, so replaying a message log reproduces the same
state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from .core import VectorClock


@dataclass(frozen=True)
class Version:
    key: str
    value: int
    vc: VectorClock
    origin: int

    def __post_init__(self) -> None:
        if self.vc[self.origin] <= 0:
            raise ValueError("a version's origin entry must be positive")

    @property
    def ident(self) -> tuple[int, int, str]:
        return (self.origin, self.vc[self.origin], self.key)

    def arbitration_key(self) -> tuple[int, int]:
        return (self.vc[self.origin], self.origin)

    def to_json(self) -> list:
        return [self.key, self.value, self.vc.to_list(), self.origin]


def latest_stable(chain: Iterable[Version], css: VectorClock) -> Version | None:
    """The arbitration-maximal version whose timestamp is covered by ``css``.

    Arbitration is ``(vc[origin], origin)`` lexicographic.
    """
    best = None
    for v in chain:
        if v.vc.leq(css) and (best is None or v.arbitration_key() > best.arbitration_key()):
            best = v
    return best


# Message vocabulary. ``op`` correlates a client request with its reply.


@dataclass(frozen=True)
class ReadRequest:
    op: int
    key: str
    vc_r: VectorClock
    vc_w: VectorClock


@dataclass(frozen=True)
class ReadReply:
    op: int
    value: int
    vc: VectorClock
    gsvc: VectorClock


@dataclass(frozen=True)
class UpdateRequest:
    op: int
    key: str
    value: int
    dvc: VectorClock


@dataclass(frozen=True)
class UpdateReply:
    op: int
    vc: VectorClock


@dataclass(frozen=True)
class Replicate:
    origin: int
    key: str
    value: int
    vc: VectorClock


@dataclass(frozen=True)
class Heartbeat:
    origin: int
    ts: int


@dataclass(frozen=True)
class UpdateCSS:
    sender: int
    pvc: VectorClock


Message = Union[ReadRequest, ReadReply, UpdateRequest, UpdateReply, Replicate, Heartbeat, UpdateCSS]

MESSAGE_TYPES = {
    cls.__name__: cls
    for cls in (ReadRequest, ReadReply, UpdateRequest, UpdateReply, Replicate, Heartbeat, UpdateCSS)
}

_CLOCK_FIELDS = {"vc_r", "vc_w", "vc", "gsvc", "dvc", "pvc"}


def message_to_json(msg: Message) -> dict:
    out: dict = {"type": type(msg).__name__}
    for name in msg.__dataclass_fields__:
        value = getattr(msg, name)
        out[name] = value.to_list() if isinstance(value, VectorClock) else value
    return out


def message_from_json(obj: dict) -> Message:
    cls = MESSAGE_TYPES[obj["type"]]
    kwargs = {}
    for name in cls.__dataclass_fields__:
        value = obj[name]
        kwargs[name] = VectorClock(tuple(value)) if name in _CLOCK_FIELDS else value
    return cls(**kwargs)


class RequestTimeout(Exception):
    """A parked request's wake predicate stayed false past the stall bound."""


@dataclass
class Parked:
    request: ReadRequest | UpdateRequest
    since: int

    def describe(self, partition: Partition, clock: int) -> str:
        req = self.request
        if isinstance(req, ReadRequest):
            need = req.vc_r.merge(req.vc_w)
            return f"read op {req.op} at {partition.name}: need {need.to_list()} <= css {partition.css.to_list()}"
        floor = max(req.dvc[partition.dc], partition.pvc[partition.dc])
        return f"update op {req.op} at {partition.name}: need {floor} < clock {clock}"


@dataclass
class Partition:
    """Server for partition ``index`` of datacenter ``dc``.

    ``get_wait`` and ``put_wait`` exist to run mutation experiments; real
    runs keep both on.
    """

    dc: int
    index: int
    n_dcs: int
    n_partitions: int
    get_wait: bool = True
    put_wait: bool = True
    clock: int = 0
    pvc: VectorClock = field(init=False)
    css: VectorClock = field(init=False)
    pmc: list[VectorClock] = field(init=False)
    store: dict[str, list[Version]] = field(init=False, default_factory=dict)
    updates: list[Version] = field(init=False, default_factory=list)
    parked: list[Parked] = field(init=False, default_factory=list)
    added: list[Version] = field(init=False, default_factory=list, repr=False)
    _seen: set = field(init=False, default_factory=set, repr=False)

    def __post_init__(self) -> None:
        zero = VectorClock.zero(self.n_dcs)
        self.pvc = zero
        self.css = zero
        self.pmc = [zero] * self.n_partitions

    @property
    def name(self) -> str:
        return f"p{self.dc}.{self.index}"

    def _tick(self, clock: int) -> None:
        if clock < self.clock:
            raise ValueError(f"{self.name}: physical clock went backwards ({clock} < {self.clock})")
        self.clock = clock

    # client requests

    def _read_ready(self, req: ReadRequest) -> bool:
        return not self.get_wait or req.vc_r.merge(req.vc_w).leq(self.css)

    def _serve_read(self, req: ReadRequest) -> ReadReply:
        version = latest_stable(self.store.get(req.key, ()), self.css)
        if version is None:
            return ReadReply(req.op, 0, VectorClock.zero(self.n_dcs), self.css)
        return ReadReply(req.op, version.value, version.vc, self.css)

    def _update_ready(self, req: UpdateRequest) -> bool:
        # Local timestamps are strictly increasing: a put never reuses a
        # timestamp already assigned or announced by propagate().
        if not self.put_wait:
            return True
        return max(req.dvc[self.dc], self.pvc[self.dc]) < self.clock

    def _apply_update(self, req: UpdateRequest) -> UpdateReply:
        vc = req.dvc.with_entry(self.dc, self.clock)
        self.pvc = self.pvc.with_entry(self.dc, self.clock)
        version = Version(req.key, req.value, vc, self.dc)
        self._insert(version)
        self.updates.append(version)
        return UpdateReply(req.op, vc)

    def handle_read(self, req: ReadRequest, clock: int, now: int = 0) -> ReadReply | None:
        self._tick(clock)
        if self._read_ready(req):
            return self._serve_read(req)
        self.parked.append(Parked(req, now))
        return None

    def handle_update(self, req: UpdateRequest, clock: int, now: int = 0) -> UpdateReply | None:
        self._tick(clock)
        if self._update_ready(req):
            return self._apply_update(req)
        self.parked.append(Parked(req, now))
        return None

    def wake(self, clock: int) -> list[ReadReply | UpdateReply]:
        """Serve every parked request whose predicate now holds, in arrival order."""
        self._tick(clock)
        replies = []
        still = []
        for p in self.parked:
            req = p.request
            if isinstance(req, ReadRequest) and self._read_ready(req):
                replies.append(self._serve_read(req))
            elif isinstance(req, UpdateRequest) and self._update_ready(req):
                replies.append(self._apply_update(req))
            else:
                still.append(p)
        self.parked = still
        return replies

    def next_update_wake(self) -> int | None:
        """Smallest clock reading that would release a parked update."""
        floors = [
            max(p.request.dvc[self.dc], self.pvc[self.dc]) + 1
            for p in self.parked
            if isinstance(p.request, UpdateRequest)
        ]
        return min(floors) if floors else None

    def stalled(self, now: int, bound: int) -> list[Parked]:
        return [p for p in self.parked if now - p.since > bound]

    # replication

    def _insert(self, version: Version) -> bool:
        if version.ident in self._seen:
            return False
        self._seen.add(version.ident)
        self.added.append(version)
        self.store.setdefault(version.key, []).append(version)
        return True

    def propagate(self, clock: int) -> list[tuple[int, Replicate | Heartbeat]]:
        """Ship buffered updates (or a heartbeat) to the sibling in every other DC."""
        self._tick(clock)
        self.pvc = self.pvc.with_entry(self.dc, max(self.pvc[self.dc], clock))
        others = [i for i in range(self.n_dcs) if i != self.dc]
        out: list[tuple[int, Replicate | Heartbeat]] = []
        if self.updates:
            for v in sorted(self.updates, key=lambda v: v.vc[self.dc]):
                for i in others:
                    out.append((i, Replicate(self.dc, v.key, v.value, v.vc)))
            self.updates = []
        else:
            for i in others:
                out.append((i, Heartbeat(self.dc, self.pvc[self.dc])))
        return out

    def handle_heartbeat(self, msg: Heartbeat) -> None:
        self.pvc = self.pvc.with_entry(msg.origin, msg.ts)

    def handle_replicate(self, msg: Replicate) -> bool:
        self.pvc = self.pvc.with_entry(msg.origin, msg.vc[msg.origin])
        return self._insert(Version(msg.key, msg.value, msg.vc, msg.origin))

    # stabilization

    def bcast(self) -> list[tuple[int, UpdateCSS]]:
        """Send own pvc to every other partition of this DC and refresh css."""
        self.recompute_css()
        return [(i, UpdateCSS(self.index, self.pvc)) for i in range(self.n_partitions) if i != self.index]

    def handle_update_css(self, msg: UpdateCSS) -> None:
        self.pmc[msg.sender] = msg.pvc
        self.recompute_css()

    def recompute_css(self) -> None:
        self.pmc[self.index] = self.pvc
        self.css = VectorClock(
            tuple(min(row[j] for row in self.pmc) for j in range(self.n_dcs))
        )

    # introspection

    def drain_added(self) -> list[Version]:
        added, self.added = self.added, []
        return added

    def versions(self) -> list[Version]:
        return [v for chain in self.store.values() for v in chain]

    def snapshot(self) -> dict:
        return {"clock": self.clock, "pvc": self.pvc.to_list(), "css": self.css.to_list()}
