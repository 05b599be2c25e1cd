"""Abstract executions, verdicts, and direct verification of the TCC predicates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from ..core import BOTTOM, History, Level, eval_register


def sees_own_writes(level: Level) -> bool:
    return level in (Level.RYW, Level.CC)


def monotonic_reads(level: Level) -> bool:
    return level in (Level.MR, Level.CC)


def monotonic_writes(level: Level) -> bool:
    return level in (Level.MW, Level.CC)


def writes_follow_reads(level: Level) -> bool:
    return level in (Level.WFR, Level.CC)


Edge = tuple[int, int]


@dataclass(frozen=True)
class AbstractExecution:
    """A history with visibility (split by read level) and arbitration.

    ``ar`` lists every event id once, earliest first.
    """

    history: History
    vis: dict[Level, frozenset[Edge]]
    ar: tuple[int, ...]

    @property
    def vis_ryw(self) -> frozenset[Edge]:
        return self.vis.get(Level.RYW, frozenset())

    @property
    def vis_mr(self) -> frozenset[Edge]:
        return self.vis.get(Level.MR, frozenset())

    @property
    def all_vis(self) -> frozenset[Edge]:
        out: set[Edge] = set()
        for edges in self.vis.values():
            out |= edges
        return frozenset(out)

    def ar_before(self, a: int, b: int) -> bool:
        pos = {eid: i for i, eid in enumerate(self.ar)}
        return pos[a] < pos[b]

    def to_json(self) -> dict:
        return {
            "vis": {lvl.value: sorted(map(list, edges)) for lvl, edges in sorted(self.vis.items()) if edges},
            "ar": list(self.ar),
            "note": "reads are placed in ar right after their last visible write, ties by event id",
        }


@dataclass(frozen=True)
class Violation:
    predicate: str
    events: tuple[int, ...] = ()
    detail: str = ""

    def to_json(self) -> dict:
        return {"predicate": self.predicate, "events": list(self.events), "detail": self.detail}


@dataclass(frozen=True)
class Verdict:
    status: str  # "satisfied" | "violated" | "undecided"
    method: str
    witness: AbstractExecution | None = None
    violation: Violation | None = None
    detail: str = ""

    @property
    def satisfied(self) -> bool:
        return self.status == "satisfied"

    def to_json(self) -> dict:
        out: dict = {"status": self.status, "method": self.method, "satisfied": self.satisfied}
        if self.violation is not None:
            out["violation"] = self.violation.to_json()
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        if self.detail:
            out["detail"] = self.detail
        return out


def _find_cycle(nodes: Iterable[int], edges: Iterable[Edge]) -> list[int] | None:
    succ: dict[int, list[int]] = {}
    for a, b in edges:
        succ.setdefault(a, []).append(b)
    color: dict[int, int] = {}
    stack_path: list[int] = []

    def visit(n: int) -> list[int] | None:
        color[n] = 1
        stack_path.append(n)
        for m in succ.get(n, ()):
            c = color.get(m, 0)
            if c == 1:
                return stack_path[stack_path.index(m) :] + [m]
            if c == 0:
                found = visit(m)
                if found:
                    return found
        stack_path.pop()
        color[n] = 2
        return None

    for n in nodes:
        if color.get(n, 0) == 0:
            found = visit(n)
            if found:
                return found
    return None


def verify_execution(ax: AbstractExecution) -> list[Violation]:
    """Check every TCC predicate directly on an explicit abstract execution.

    Returns all violations found; an empty list means ``ax`` satisfies TCC.
    Independent of how ``ax`` was produced.
    """
    h = ax.history
    problems: list[Violation] = []
    ids = [e.id for e in h.events]

    if sorted(ax.ar) != sorted(ids) or len(set(ax.ar)) != len(ax.ar):
        return [Violation("ar-total", (), "ar is not a permutation of the events")]
    pos = {eid: i for i, eid in enumerate(ax.ar)}

    for level, edges in ax.vis.items():
        for a, b in edges:
            ea, eb = h.event(a), h.event(b)
            if not (ea.is_write or ea.level == level) or not (eb.is_write or eb.level == level):
                problems.append(Violation("vis-domain", (a, b), f"edge outside E_{level.value}"))
            if not eb.is_read or eb.level != level:
                problems.append(Violation("vis-domain", (a, b), f"vis_{level.value} edge into a non-{level.value} read"))

    vis = ax.all_vis
    cycle = _find_cycle(ids, vis)
    if cycle:
        problems.append(Violation("vis-acyclic", tuple(cycle)))
    for a, b in sorted(vis):
        if pos[a] >= pos[b]:
            problems.append(Violation("vis-in-ar", (a, b)))

    visible: dict[int, set[int]] = {}
    for a, b in vis:
        visible.setdefault(b, set()).add(a)

    for e in h.events:
        before = h.so_before(e.id)
        if e.is_read and sees_own_writes(e.level):
            for w in before:
                if h.event(w).is_write and (w, e.id) not in ax.vis.get(e.level, ()):
                    problems.append(Violation("ryw", (w, e.id)))
        if e.is_read and monotonic_reads(e.level):
            for r in before:
                if h.event(r).is_read:
                    for w in visible.get(r, ()):
                        if h.event(w).is_write and (w, e.id) not in ax.vis.get(e.level, ()):
                            problems.append(Violation("mr", (w, r, e.id)))
        if e.is_write and monotonic_writes(e.level):
            for w in before:
                if h.event(w).is_write and pos[w] >= pos[e.id]:
                    problems.append(Violation("mw", (w, e.id)))
        if e.is_write and writes_follow_reads(e.level):
            for r in before:
                if h.event(r).is_read:
                    for w in visible.get(r, ()):
                        if h.event(w).is_write and pos[w] >= pos[e.id]:
                            problems.append(Violation("wfr", (w, r, e.id)))

    for e in h.reads:
        context = sorted(
            (w for w in ax.vis.get(e.level, ()) if w[1] == e.id),
            key=lambda edge: pos[edge[0]],
        )
        ops = [h.event(a).op for a, _ in context if h.event(a).is_write and h.event(a).key == e.key]
        expected = eval_register(ops, e.op)
        if expected is BOTTOM or expected != e.rval:
            problems.append(Violation("rval", (e.id,), f"context yields {expected}, history says {e.rval}"))
    return problems
