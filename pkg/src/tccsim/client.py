"""Client sessions: dependency-vector selection per consistency level."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

from .core import READ_LEVELS, WRITE_LEVELS, Level, VectorClock
from .server import ReadReply, ReadRequest, UpdateReply, UpdateRequest


def partition_of(key: str, n_partitions: int) -> int:
    """Stable key-to-partition map, identical in every datacenter."""
    return zlib.crc32(key.encode("utf-8")) % n_partitions


@dataclass
class SessionState:
    id: int
    home_dc: int
    n_dcs: int
    hrvc: VectorClock = field(init=False)
    hwvc: VectorClock = field(init=False)
    cvc_r: VectorClock = field(init=False)
    cvc_w: VectorClock = field(init=False)

    def __post_init__(self) -> None:
        zero = VectorClock.zero(self.n_dcs)
        self.hrvc = self.hwvc = self.cvc_r = self.cvc_w = zero

    def snapshot(self) -> dict:
        return {
            "hrvc": self.hrvc.to_list(),
            "hwvc": self.hwvc.to_list(),
            "cvc_r": self.cvc_r.to_list(),
            "cvc_w": self.cvc_w.to_list(),
        }


def select_read_vectors(level: Level, s: SessionState) -> tuple[VectorClock, VectorClock]:
    level = Level(level)
    if level not in READ_LEVELS:
        raise ValueError(f"{level.value} is not a read level")
    zero = VectorClock.zero(s.n_dcs)
    if level is Level.EC:
        return zero, zero
    if level is Level.MR:
        return s.hrvc, zero
    if level is Level.RYW:
        return zero, s.hwvc
    return s.hrvc, s.hwvc


def select_write_vector(level: Level, s: SessionState) -> VectorClock:
    level = Level(level)
    if level not in WRITE_LEVELS:
        raise ValueError(f"{level.value} is not a write level")
    if level is Level.EC:
        return VectorClock.zero(s.n_dcs)
    if level is Level.MW:
        return s.cvc_w
    if level is Level.WFR:
        return s.cvc_r
    return s.cvc_r.merge(s.cvc_w)


def begin_get(s: SessionState, op: int, key: str, level: Level) -> ReadRequest:
    vc_r, vc_w = select_read_vectors(level, s)
    return ReadRequest(op, key, vc_r, vc_w)


def complete_get(s: SessionState, reply: ReadReply) -> int:
    s.hrvc = s.hrvc.merge(reply.gsvc)
    s.cvc_r = s.cvc_r.merge(reply.vc)
    return reply.value


def begin_put(s: SessionState, op: int, key: str, value: int, level: Level) -> UpdateRequest:
    return UpdateRequest(op, key, value, select_write_vector(level, s))


def complete_put(s: SessionState, reply: UpdateReply) -> None:
    s.cvc_w = s.cvc_w.merge(reply.vc)
    s.hwvc = s.hwvc.merge(reply.vc)
