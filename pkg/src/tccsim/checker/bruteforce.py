"""Exhaustive search for an abstract execution witnessing TCC.

For each reads-from assignment the least visibility relation is computed;
any larger one only adds obligations. Arbitration over writes is then
searched over the linear extensions of the session-guarantee edges, and
each candidate is accepted only if it passes ``verify_execution``.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator

from ..core import History, Level
from .execution import (
    AbstractExecution,
    Edge,
    Verdict,
    Violation,
    _find_cycle,
    monotonic_reads,
    monotonic_writes,
    sees_own_writes,
    verify_execution,
    writes_follow_reads,
)

DEFAULT_BOUND = 8


class VisCycle(ValueError):
    def __init__(self, cycle: list[int]):
        self.cycle = cycle
        super().__init__(f"visibility cycle through events {cycle}")


def reads_from_candidates(h: History) -> dict[int, list[int | None]]:
    """Writes each read could have read from; None stands for the initial value."""
    out: dict[int, list[int | None]] = {}
    for r in h.reads:
        cands: list[int | None] = [w.id for w in h.writes_to(r.key) if w.op.value == r.rval]
        if r.rval == 0:
            cands.append(None)
        out[r.id] = cands
    return out


def required_vis_closure(
    h: History, rf: dict[int, int | None], extra: Iterable[Edge] = ()
) -> dict[Level, frozenset[Edge]]:
    """Least visibility containing ``rf`` (and ``extra``) closed under C^ryw and C^mr.

    Returns edges grouped by the level of the read they point into.
    """
    visible: dict[int, set[int]] = {r.id: set() for r in h.reads}
    for r, w in rf.items():
        if w is None:
            continue
        er, ew = h.event(r), h.event(w)
        if not er.is_read or not ew.is_write or ew.key != er.key or ew.op.value != er.rval:
            raise ValueError(f"reads-from edge {w}->{r} does not match key and value")
        visible[r].add(w)
    for w, r in extra:
        if not h.event(w).is_write or not h.event(r).is_read:
            raise ValueError(f"assumed visibility edge {w}->{r} must run from a write to a read")
        visible[r].add(w)

    limit = len(h) ** 2 + 1
    for _ in range(limit):
        changed = False
        for r in h.reads:
            before = h.so_before(r.id)
            add: set[int] = set()
            if sees_own_writes(r.level):
                add.update(x for x in before if h.event(x).is_write)
            if monotonic_reads(r.level):
                for x in before:
                    if h.event(x).is_read:
                        add |= visible[x]
            if not add <= visible[r.id]:
                visible[r.id] |= add
                changed = True
        if not changed:
            break
    else:  # pragma: no cover - the loop is monotone on a finite lattice
        raise RuntimeError("visibility closure did not converge")

    edges = [(w, r) for r, ws in visible.items() for w in ws]
    cycle = _find_cycle([e.id for e in h.events], edges)
    if cycle:
        raise VisCycle(cycle)
    grouped: dict[Level, set[Edge]] = {}
    for w, r in edges:
        grouped.setdefault(h.event(r).level, set()).add((w, r))
    return {lvl: frozenset(es) for lvl, es in grouped.items()}


def arbitration_edges(h: History, vis: dict[Level, frozenset[Edge]]) -> set[Edge]:
    """Write-to-write ordering demanded by C^mw and C^wfr."""
    visible: dict[int, set[int]] = {}
    for edges in vis.values():
        for w, r in edges:
            visible.setdefault(r, set()).add(w)
    out: set[Edge] = set()
    for e in h.writes:
        before = h.so_before(e.id)
        if monotonic_writes(e.level):
            out.update((w, e.id) for w in before if h.event(w).is_write)
        if writes_follow_reads(e.level):
            for r in before:
                if h.event(r).is_read:
                    out.update((w, e.id) for w in visible.get(r, ()))
    return out


def linear_extensions(nodes: list[int], edges: set[Edge]) -> Iterator[list[int]]:
    preds: dict[int, set[int]] = {n: set() for n in nodes}
    for a, b in edges:
        preds[b].add(a)
    placed: list[int] = []
    done: set[int] = set()

    def rec() -> Iterator[list[int]]:
        if len(placed) == len(nodes):
            yield list(placed)
            return
        for n in nodes:
            if n not in done and preds[n] <= done:
                placed.append(n)
                done.add(n)
                yield from rec()
                done.discard(n)
                placed.pop()

    yield from rec()


def place_reads(h: History, write_order: list[int], vis: dict[Level, frozenset[Edge]]) -> tuple[int, ...]:
    pos = {w: i for i, w in enumerate(write_order)}
    last: dict[int, int] = {r.id: -1 for r in h.reads}
    for edges in vis.values():
        for w, r in edges:
            last[r] = max(last[r], pos[w])
    slots: dict[int, list[int]] = {}
    for r, p in last.items():
        slots.setdefault(p, []).append(r)
    ar: list[int] = sorted(slots.get(-1, []))
    for i, w in enumerate(write_order):
        ar.append(w)
        ar.extend(sorted(slots.get(i, [])))
    return tuple(ar)


def check_brute_force(
    h: History,
    bound: int = DEFAULT_BOUND,
    assume_vis: Iterable[Edge] = (),
    assume_ar: Iterable[Edge] = (),
) -> Verdict:
    """Decide TCC for a small history by exhaustive search.

    ``assume_vis`` and ``assume_ar`` pin extra write-to-read visibility and
    write-to-write arbitration edges that the witness must contain.
    """
    if len(h) > bound:
        return Verdict("undecided", "brute", detail=f"{len(h)} events exceeds the bound of {bound}")
    assume_vis = tuple(assume_vis)
    assume_ar = set(assume_ar)
    cands = reads_from_candidates(h)
    reads = sorted(cands)
    for r in reads:
        if not cands[r]:
            return Verdict(
                "violated",
                "brute",
                violation=Violation("rval", (r,), "no write of the returned value exists"),
            )
    writes = [w.id for w in h.writes]
    saw_cycle = None
    for choice in itertools.product(*(cands[r] for r in reads)):
        rf = dict(zip(reads, choice))
        try:
            vis = required_vis_closure(h, rf, assume_vis)
        except VisCycle as exc:
            saw_cycle = exc
            continue
        edges = arbitration_edges(h, vis) | assume_ar
        for order in linear_extensions(writes, edges):
            ax = AbstractExecution(h, vis, place_reads(h, order, vis))
            if not verify_execution(ax):
                return Verdict("satisfied", "brute", witness=ax)
    if saw_cycle is not None:
        return Verdict("violated", "brute", violation=Violation("vis-acyclic", tuple(saw_cycle.cycle)))
    return Verdict(
        "violated",
        "brute",
        violation=Violation("tcc", tuple(reads), "no reads-from choice and arbitration order satisfy every predicate"),
    )
