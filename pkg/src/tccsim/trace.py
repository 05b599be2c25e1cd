"""Trace files and the invariants asserted over them.

Every assertion here returns a list of human-readable failures; an empty
list means the invariant held over the whole trace.
"""

from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path
from typing import Iterable

PARTITION_VECTORS = ("pvc", "css")
SESSION_VECTORS = ("hrvc", "hwvc", "cvc_r", "cvc_w")


def dump_trace(trace: Iterable[dict], path: str | Path) -> None:
    with open(path, "w") as fh:
        for rec in trace:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")


def load_trace(path: str | Path) -> list[dict]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"trace line {lineno}: {exc}") from exc
    return out


def _leq(a: list[int], b: list[int]) -> bool:
    return all(x <= y for x, y in zip(a, b))


def check_monotonic(trace: Iterable[dict]) -> list[str]:
    """pvc, css and the partition clock never decrease; neither do session vectors."""
    failures = []
    last: dict[tuple[str, str], list[int]] = {}
    last_clock: dict[str, int] = {}
    for rec in trace:
        name = rec["dst"]
        if "state" in rec:
            vectors = [(v, rec["state"][v]) for v in SESSION_VECTORS]
        else:
            vectors = [(v, rec[v]) for v in PARTITION_VECTORS]
            if rec["clock"] < last_clock.get(name, rec["clock"]):
                failures.append(f"t={rec['t']} {name}: clock went from {last_clock[name]} to {rec['clock']}")
            last_clock[name] = rec["clock"]
        for vname, vec in vectors:
            prev = last.get((name, vname))
            if prev is not None and not _leq(prev, vec):
                failures.append(f"t={rec['t']} {name}.{vname}: {prev} -> {vec}")
            last[(name, vname)] = vec
    return failures


def check_fifo(trace: Iterable[dict]) -> list[str]:
    """Per channel, messages are delivered in send order at strictly increasing times."""
    failures = []
    sent: dict[tuple[str, str], list[tuple[int, str]]] = defaultdict(list)
    delivered: dict[tuple[str, str], list[tuple[int, str]]] = defaultdict(list)
    for rec in trace:
        for o in rec.get("out", ()):
            sent[(rec["dst"], o["dst"])].append((o["at"], o["type"]))
        if "msg" in rec:
            delivered[(rec["src"], rec["dst"])].append((rec["t"], rec["msg"]["type"]))
    for ch, sends in sent.items():
        times = [at for at, _ in sends]
        if any(b <= a for a, b in zip(times, times[1:])):
            failures.append(f"channel {ch}: delivery times not strictly increasing")
        got = delivered.get(ch, [])
        if got != sends[: len(got)]:
            failures.append(f"channel {ch}: delivery order differs from send order")
    return failures


def created_versions(trace: Iterable[dict]) -> dict[tuple[int, int], list[tuple[str, int, list[int]]]]:
    """Versions created at each (dc, partition), as (key, value, vc), with origin == dc."""
    out: dict[tuple[int, int], list] = defaultdict(list)
    for rec in trace:
        if "added" not in rec:
            continue
        d, m = _where(rec["dst"])
        for key, value, vc, origin in rec["added"]:
            if origin == d:
                out[(d, m)].append((key, value, vc))
    return out


def _where(name: str) -> tuple[int, int]:
    d, m = name[1:].split(".")
    return int(d), int(m)


def check_prefix(trace: Iterable[dict]) -> list[str]:
    """css[i] >= t at (d, m) implies every version of (i, m) with vc[i] <= t is stored there."""
    trace = list(trace)
    created = created_versions(trace)
    failures = []
    present: dict[str, set[tuple[int, int, str]]] = defaultdict(set)
    for rec in trace:
        name = rec["dst"]
        if not name.startswith("p"):
            continue
        for key, _value, vc, origin in rec.get("added", ()):
            present[name].add((origin, vc[origin], key))
        _, m = _where(name)
        for i, bound in enumerate(rec["css"]):
            for key, _value, vc in created.get((i, m), ()):
                if vc[i] <= bound and (i, vc[i], key) not in present[name]:
                    failures.append(
                        f"t={rec['t']} {name}: css[{i}]={bound} but version {key}@{vc} from p{i}.{m} is missing"
                    )
    return failures


def check_eventual_visibility(trace: Iterable[dict], deadline: int) -> list[str]:
    """Every created version is stable at its partition in every DC by ``deadline``."""
    trace = list(trace)
    created = created_versions(trace)
    n_dcs = max((len(r["css"]) for r in trace if "css" in r), default=0)
    first_stable: dict[tuple[str, tuple], int] = {}
    by_partition: dict[int, list] = defaultdict(list)
    for (i, m), versions in created.items():
        by_partition[m].extend(versions)
    for rec in trace:
        name = rec["dst"]
        if not name.startswith("p"):
            continue
        _, m = _where(name)
        for key, value, vc in by_partition.get(m, ()):
            ident = (key, value)
            if (name, ident) not in first_stable and _leq(vc, rec["css"]):
                first_stable[(name, ident)] = rec["t"]
    failures = []
    for m, versions in by_partition.items():
        for key, value, vc in versions:
            for d in range(n_dcs):
                name = f"p{d}.{m}"
                t = first_stable.get((name, (key, value)))
                if t is None or t > deadline:
                    when = "never" if t is None else f"only at t={t}"
                    failures.append(f"{key}={value} {vc} stable at {name} {when}, deadline {deadline}")
    return failures


def issued_ops(trace: Iterable[dict]) -> list[dict]:
    return [dict(rec["issue"], t=rec["t"], session=rec["dst"]) for rec in trace if "issue" in rec]


def remote_fraction(trace: Iterable[dict]) -> float:
    ops = issued_ops(trace)
    return sum(o["remote"] for o in ops) / len(ops) if ops else 0.0
