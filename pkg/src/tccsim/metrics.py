"""Run metrics, computed from the trace alone.

Latency runs from issue to reply delivery at the client. Blocking time
runs from request arrival at the partition to the reply being sent, so it
isolates the protocol's waits from network delay.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable

TICK_MS = 0.1
_VECTOR_FIELDS = ("vc_r", "vc_w", "vc", "gsvc", "dvc")
_CLIENT_TYPES = ("ReadRequest", "ReadReply", "UpdateRequest", "UpdateReply")


def percentile(values: list[float], q: float) -> float:
    """Nearest-rank percentile; 0 for an empty list."""
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = max(1, math.ceil(q / 100 * len(ordered)))
    return ordered[rank - 1]


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


@dataclass
class MetricsReport:
    ops: int = 0
    reads: int = 0
    writes: int = 0
    remote_ops: int = 0
    duration_ms: float = 0.0
    mean_latency_ms: float = 0.0
    p50_latency_ms: float = 0.0
    p95_latency_ms: float = 0.0
    p99_latency_ms: float = 0.0
    mean_read_latency_ms: float = 0.0
    mean_write_latency_ms: float = 0.0
    mean_read_blocking_ms: float = 0.0
    mean_write_blocking_ms: float = 0.0
    blocking_ms_by_level: dict[str, float] = field(default_factory=dict)
    throughput_per_dc: dict[str, float] = field(default_factory=dict)
    messages: dict[str, int] = field(default_factory=dict)
    metadata_entries_per_op: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)

    def flat(self) -> dict:
        """One-level dict for CSV output; nested maps become prefixed columns."""
        out: dict = {}
        for k, v in self.to_json().items():
            if isinstance(v, dict):
                for sub, x in sorted(v.items()):
                    out[f"{k}.{sub}"] = x
            else:
                out[k] = v
        return out


def compute_metrics(trace: Iterable[dict]) -> MetricsReport:
    issued: dict[int, dict] = {}
    arrived: dict[int, int] = {}
    emitted: dict[int, int] = {}
    completed: dict[int, int] = {}
    messages: Counter = Counter()
    metadata = 0

    for rec in trace:
        if "issue" in rec:
            op = rec["issue"]
            issued[op["op"]] = dict(op, t=rec["t"], session=rec["dst"])
        msg = rec.get("msg")
        if msg is not None:
            messages[msg["type"]] += 1
            if msg["type"] in _CLIENT_TYPES:
                metadata += sum(len(msg[f]) for f in _VECTOR_FIELDS if f in msg)
            if msg["type"] in ("ReadRequest", "UpdateRequest"):
                arrived[msg["op"]] = rec["t"]
            elif msg["type"] in ("ReadReply", "UpdateReply"):
                completed[msg["op"]] = rec["t"]
        for o in rec.get("out", ()):
            if o["type"] in ("ReadReply", "UpdateReply"):
                emitted[o["op"]] = rec["t"]

    report = MetricsReport()
    done = [issued[o] for o in sorted(completed) if o in issued]
    report.ops = len(done)
    report.reads = sum(o["kind"] == "read" for o in done)
    report.writes = report.ops - report.reads
    report.remote_ops = sum(bool(o["remote"]) for o in done)

    latency = [(completed[o["op"]] - o["t"]) * TICK_MS for o in done]
    report.mean_latency_ms = _mean(latency)
    report.p50_latency_ms = percentile(latency, 50)
    report.p95_latency_ms = percentile(latency, 95)
    report.p99_latency_ms = percentile(latency, 99)
    report.mean_read_latency_ms = _mean([l for l, o in zip(latency, done) if o["kind"] == "read"])
    report.mean_write_latency_ms = _mean([l for l, o in zip(latency, done) if o["kind"] == "write"])

    blocking: dict[str, list[float]] = defaultdict(list)
    read_block, write_block = [], []
    for o in done:
        b = (emitted[o["op"]] - arrived[o["op"]]) * TICK_MS
        blocking[o["level"]].append(b)
        (read_block if o["kind"] == "read" else write_block).append(b)
    report.blocking_ms_by_level = {lvl: _mean(v) for lvl, v in sorted(blocking.items())}
    report.mean_read_blocking_ms = _mean(read_block)
    report.mean_write_blocking_ms = _mean(write_block)

    if done:
        start = min(o["t"] for o in done)
        end = max(completed[o["op"]] for o in done)
        report.duration_ms = (end - start) * TICK_MS
        seconds = max(end - start, 1) * TICK_MS / 1000
        per_dc: Counter = Counter()
        for o in done:
            per_dc[str(o["home"])] += 1
        report.throughput_per_dc = {dc: n / seconds for dc, n in sorted(per_dc.items())}
        report.metadata_entries_per_op = metadata / len(done)
    report.messages = dict(sorted(messages.items()))
    return report


def metrics_csv(rows: list[dict]) -> str:
    columns: list[str] = []
    for row in rows:
        for k in row:
            if k not in columns:
                columns.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def metrics_json(report: MetricsReport) -> str:
    return json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
