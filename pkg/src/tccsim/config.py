"""Flat JSON run configuration with camelCase keys.

Every key is optional except ``seed``. Validation collects every problem
before failing so one run reports all bad fields at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .simnet import Topology
from .workload import WorkloadSpec

SWEEP_AXES = ("readRatio", "sessions", "partitions", "levelCase")

_INT_KEYS = {
    "dcs", "partitions", "sessionsPerDc", "sessionsPerPartition", "opsPerSession", "keyCount",
    "clockSkew", "propagatePeriod", "bcastPeriod", "stallBound", "settle", "thinkTime", "seed",
}
_FLOAT_KEYS = {"readRatio", "remoteFraction"}
_BOOL_KEYS = {"heartbeats", "getWait", "putWait"}
_STR_KEYS = {"keyDistribution", "levelCase"}
_RANGE_KEYS = {"intraDcDelay", "interDcDelay"}
_OTHER_KEYS = {"sweep"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _STR_KEYS | _RANGE_KEYS | _OTHER_KEYS


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid configuration: " + "; ".join(errors))


@dataclass(frozen=True)
class RunConfig:
    topology: Topology
    workload: WorkloadSpec
    seed: int
    sweep: dict[str, list] = field(default_factory=dict)

    def to_dict(self) -> dict:
        t, w = self.topology, self.workload
        out = {
            "dcs": t.n_dcs,
            "partitions": t.n_partitions,
            "intraDcDelay": list(t.intra_dc_delay),
            "interDcDelay": list(t.inter_dc_delay),
            "clockSkew": t.clock_skew,
            "propagatePeriod": t.propagate_period,
            "bcastPeriod": t.bcast_period,
            "heartbeats": t.heartbeats,
            "stallBound": t.stall_bound,
            "getWait": t.get_wait,
            "putWait": t.put_wait,
            "sessionsPerDc": w.sessions_per_dc,
            "opsPerSession": w.ops_per_session,
            "readRatio": w.read_ratio,
            "remoteFraction": w.remote_fraction,
            "keyCount": w.key_count,
            "keyDistribution": w.key_distribution,
            "levelCase": w.level_case,
            "thinkTime": w.think_time,
            "seed": self.seed,
        }
        if t.settle is not None:
            out["settle"] = t.settle
        if self.sweep:
            out["sweep"] = self.sweep
        return out


def _type_error(key: str, value: Any) -> str | None:
    if key not in KNOWN_KEYS:
        return f"{key}: unknown key"
    if key in _INT_KEYS and (isinstance(value, bool) or not isinstance(value, int)):
        return f"{key}: expected an integer, got {value!r}"
    if key in _FLOAT_KEYS and (isinstance(value, bool) or not isinstance(value, (int, float))):
        return f"{key}: expected a number, got {value!r}"
    if key in _BOOL_KEYS and not isinstance(value, bool):
        return f"{key}: expected true or false, got {value!r}"
    if key in _STR_KEYS and not isinstance(value, str):
        return f"{key}: expected a string, got {value!r}"
    if key in _RANGE_KEYS and not (
        isinstance(value, list) and len(value) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in value)
    ):
        return f"{key}: expected [min, max] integer ticks, got {value!r}"
    if key == "sweep":
        if not isinstance(value, dict) or not all(isinstance(v, list) for v in value.values()):
            return "sweep: expected a map from axis name to a list of values"
        bad = [axis for axis in value if axis not in SWEEP_AXES]
        if bad:
            return f"sweep: unknown axis {bad[0]!r}, expected one of {list(SWEEP_AXES)}"
    return None


def config_from_dict(raw: dict[str, Any]) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    errors = []
    clean = {}
    for key, value in raw.items():
        err = _type_error(key, value)
        if err:
            errors.append(err)
        else:
            clean[key] = value
    if "seed" not in raw:
        errors.append("seed: required")
    if "sessionsPerDc" in clean and "sessionsPerPartition" in clean:
        errors.append("sessionsPerPartition: give either sessionsPerDc or sessionsPerPartition, not both")
    raw = clean

    dt, dw = Topology(), WorkloadSpec()
    partitions = raw.get("partitions", dt.n_partitions)
    sessions = raw.get("sessionsPerDc", dw.sessions_per_dc)
    if "sessionsPerPartition" in raw:
        sessions = raw["sessionsPerPartition"] * partitions
    topology = Topology(
        n_dcs=raw.get("dcs", dt.n_dcs),
        n_partitions=partitions,
        intra_dc_delay=tuple(raw.get("intraDcDelay", dt.intra_dc_delay)),
        inter_dc_delay=tuple(raw.get("interDcDelay", dt.inter_dc_delay)),
        clock_skew=raw.get("clockSkew", dt.clock_skew),
        propagate_period=raw.get("propagatePeriod", dt.propagate_period),
        bcast_period=raw.get("bcastPeriod", dt.bcast_period),
        heartbeats=raw.get("heartbeats", dt.heartbeats),
        stall_bound=raw.get("stallBound", dt.stall_bound),
        settle=raw.get("settle", dt.settle),
        get_wait=raw.get("getWait", dt.get_wait),
        put_wait=raw.get("putWait", dt.put_wait),
    )
    workload = WorkloadSpec(
        sessions_per_dc=sessions,
        ops_per_session=raw.get("opsPerSession", dw.ops_per_session),
        read_ratio=float(raw.get("readRatio", dw.read_ratio)),
        remote_fraction=float(raw.get("remoteFraction", dw.remote_fraction)),
        key_count=raw.get("keyCount", dw.key_count),
        key_distribution=raw.get("keyDistribution", dw.key_distribution),
        level_case=raw.get("levelCase", dw.level_case),
        think_time=raw.get("thinkTime", dw.think_time),
    )
    errors += topology.validate() + workload.validate()
    if raw.get("seed", 0) < 0:
        errors.append("seed: must be >= 0")
    if errors:
        raise ConfigError(errors)
    return RunConfig(topology, workload, raw["seed"], dict(raw.get("sweep", {})))


def load_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read a config file (or start empty) and apply ``overrides`` on top."""
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError([f"config: cannot read {path}: {exc.strerror}"]) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: line {exc.lineno}: {exc.msg}"]) from exc
    raw = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    if "sessionsPerDc" in (overrides or {}) and overrides["sessionsPerDc"] is not None:
        raw.pop("sessionsPerPartition", None)
    if "sessionsPerPartition" in (overrides or {}) and overrides["sessionsPerPartition"] is not None:
        raw.pop("sessionsPerDc", None)
    return config_from_dict(raw)


def with_axis(cfg: RunConfig, axis: str, value: Any) -> RunConfig:
    """The config of one sweep point; the seed is shared by every point."""
    raw = cfg.to_dict()
    raw.pop("sweep", None)
    key = {"sessions": "sessionsPerDc"}.get(axis, axis)
    if axis not in SWEEP_AXES:
        raise ConfigError([f"axis: must be one of {list(SWEEP_AXES)}"])
    raw[key] = value
    return replace(config_from_dict(raw), sweep={})
