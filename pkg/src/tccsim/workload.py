"""Seeded workload generation.

The op mix (read/write choice, key, remote routing) is drawn from one
stream and the per-op level from another, so every level case sees exactly
the same sequence of reads and writes for a given seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .core import Level

LEVEL_CASES: dict[str, tuple[Level, Level] | None] = {
    "EC/EC": (Level.EC, Level.EC),
    "CC/CC": (Level.CC, Level.CC),
    "RYW/MW": (Level.RYW, Level.MW),
    "RYW/WFR": (Level.RYW, Level.WFR),
    "MR/MW": (Level.MR, Level.MW),
    "MR/WFR": (Level.MR, Level.WFR),
    # every op draws its own level; used by the property suites
    "MIXED": None,
}

PAPER_CASES = ("EC/EC", "CC/CC", "RYW/MW", "RYW/WFR", "MR/MW", "MR/WFR")

_MIXED_READS = (Level.EC, Level.RYW, Level.MR, Level.CC)
_MIXED_WRITES = (Level.EC, Level.MW, Level.WFR, Level.CC)


@dataclass(frozen=True)
class WorkloadSpec:
    sessions_per_dc: int = 6
    ops_per_session: int = 20
    read_ratio: float = 0.5
    remote_fraction: float = 0.0
    key_count: int = 30
    key_distribution: str = "uniform"
    level_case: str = "MR/WFR"
    think_time: int = 0

    def validate(self) -> list[str]:
        errors = []
        if self.sessions_per_dc < 1:
            errors.append("sessionsPerDc: must be >= 1")
        if self.ops_per_session < 1:
            errors.append("opsPerSession: must be >= 1")
        if self.key_count < 1:
            errors.append("keyCount: must be >= 1")
        if not 0.0 <= self.read_ratio <= 1.0:
            errors.append("readRatio: must lie in [0, 1]")
        if not 0.0 <= self.remote_fraction <= 1.0:
            errors.append("remoteFraction: must lie in [0, 1]")
        if self.key_distribution != "uniform":
            errors.append("keyDistribution: only 'uniform' is supported")
        if self.level_case not in LEVEL_CASES:
            errors.append(f"levelCase: must be one of {sorted(LEVEL_CASES)}")
        if self.think_time < 0:
            errors.append("thinkTime: must be >= 0")
        return errors


@dataclass(frozen=True)
class PlannedOp:
    kind: str
    key: str
    level: Level
    value: int | None = None
    target_dc: int = 0


@dataclass(frozen=True)
class SessionPlan:
    id: int
    home_dc: int
    ops: tuple[PlannedOp, ...]


def plan_sessions(spec: WorkloadSpec, n_dcs: int, seed: int) -> list[SessionPlan]:
    mix = random.Random(f"workload:{seed}")
    levels = random.Random(f"levels:{seed}")
    case = LEVEL_CASES[spec.level_case]
    keys = [f"k{i}" for i in range(spec.key_count)]
    counter = 0
    plans = []
    sid = 0
    for dc in range(n_dcs):
        for _ in range(spec.sessions_per_dc):
            others = [d for d in range(n_dcs) if d != dc]
            rr = 0
            ops = []
            for _ in range(spec.ops_per_session):
                is_read = mix.random() < spec.read_ratio
                key = mix.choice(keys)
                target = dc
                if others and mix.random() < spec.remote_fraction:
                    target = others[rr % len(others)]
                    rr += 1
                if case is None:
                    level = levels.choice(_MIXED_READS if is_read else _MIXED_WRITES)
                else:
                    level = case[0] if is_read else case[1]
                if is_read:
                    ops.append(PlannedOp("read", key, level, None, target))
                else:
                    counter += 1
                    ops.append(PlannedOp("write", key, level, counter, target))
            plans.append(SessionPlan(sid, dc, tuple(ops)))
            sid += 1
    return plans
