import pytest

from tccsim.core import Level
from tccsim.server import Heartbeat
from tccsim.simnet import SimulationStall, Simulator, Topology, run
from tccsim.workload import PlannedOp, SessionPlan, WorkloadSpec, plan_sessions


def plans(spec=WorkloadSpec(sessions_per_dc=2, ops_per_session=6, key_count=4, level_case="MIXED"), dcs=2, seed=1):
    return plan_sessions(spec, dcs, seed)


def test_same_seed_same_digest():
    a = run(Topology(), plans(), 1)
    b = run(Topology(), plans(), 1)
    assert a.digest() == b.digest()
    assert a.trace_jsonl() == b.trace_jsonl()


def test_different_seed_different_trace():
    assert run(Topology(), plans(seed=1), 1).digest() != run(Topology(), plans(seed=2), 2).digest()


def test_single_partition_read_your_write():
    topo = Topology(n_dcs=1, n_partitions=1)
    plan = SessionPlan(0, 0, (PlannedOp("write", "k", Level.MW, 42), PlannedOp("read", "k", Level.RYW)))
    res = run(topo, [plan], 3)
    write, read = res.history.events
    assert read.rval == 42
    assert write.meta.vc.leq(read.meta.gsvc)


def test_mr_read_blocks_until_remote_stamp_is_stable_locally():
    topo = Topology(inter_dc_delay=(200, 220), propagate_period=10, bcast_period=5)
    # a DC 1 session reads locally, picking up DC 1's fresh stable vector,
    # then reads at DC 0, which must wait until it has heard from DC 1 that far;
    # the EC reads only let DC 1's own stabilization get going first
    warmup = tuple(PlannedOp("read", "j", Level.EC, None, 1) for _ in range(5))
    probe = (PlannedOp("read", "k", Level.MR, None, 1), PlannedOp("read", "k", Level.MR, None, 0))
    res = run(topo, [SessionPlan(0, 1, warmup + probe)], 5)
    first, second = res.history.events[-2:]
    assert first.meta.gsvc[1] > 0
    assert first.meta.gsvc.leq(second.meta.gsvc)
    arrive = next(
        r["t"] for r in res.trace if r.get("msg", {}).get("type") == "ReadRequest" and r["msg"]["op"] == second.id
    )
    assert second.meta.applied_at > arrive


def test_clock_of_applies_fixed_skew():
    sim = Simulator(Topology(clock_skew=2), [], 0)
    sim.skews[(0, 0)], sim.skews[(0, 1)] = 2, -2
    assert sim.clock_of((0, 0), 10) == 12
    assert sim.clock_of((0, 1), 10) == 8
    assert sim.clock_of((0, 0), 10) < sim.clock_of((0, 0), 11)


def test_fifo_clamps_later_sends():
    sim = Simulator(Topology(), [], 0)
    sim.now = 10
    out: list = []
    first = sim.send_fifo("p0.0", "p1.0", 9, (1, 0), Heartbeat(0, 1), out)
    second = sim.send_fifo("p0.0", "p1.0", 3, (1, 0), Heartbeat(0, 2), out)
    other = sim.send_fifo("p0.1", "p1.1", 3, (1, 1), Heartbeat(0, 2), out)
    assert (first, second, other) == (19, 20, 13)


def test_stall_reports_unsatisfied_predicate():
    # without heartbeats the idle partitions of DC 0 never advance DC 1's
    # css[0], so a RYW read at DC 1 of a DC 0 write can never be served
    topo = Topology(heartbeats=False, stall_bound=400)
    plan = SessionPlan(
        0, 0, (PlannedOp("write", "k", Level.EC, 1, 0), PlannedOp("read", "k", Level.RYW, None, 1))
    )
    with pytest.raises(SimulationStall) as exc:
        run(topo, [plan], 0)
    assert any("need" in line and "css" in line for line in exc.value.report)


def test_invalid_topology_rejected():
    with pytest.raises(ValueError, match="partitions"):
        Simulator(Topology(n_partitions=0), [], 0)


def test_settles_after_quiescence():
    res = run(Topology(), plans(), 4)
    assert res.end_time == res.quiescence_time + res.topology.settle_ticks
    assert all(not p.parked for p in res.partitions.values())
    assert len(res.history) == 2 * 2 * 6
