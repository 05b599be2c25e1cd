import copy

import pytest

from tccsim.metrics import compute_metrics, metrics_csv, percentile
from tccsim.simnet import Topology, run
from tccsim.trace import (
    check_eventual_visibility,
    check_fifo,
    check_monotonic,
    check_prefix,
    dump_trace,
    load_trace,
    remote_fraction,
)
from tccsim.workload import WorkloadSpec, plan_sessions


@pytest.fixture(scope="module")
def result():
    spec = WorkloadSpec(sessions_per_dc=3, ops_per_session=8, key_count=5, level_case="MIXED", remote_fraction=0.25)
    return run(Topology(), plan_sessions(spec, 2, 11), 11)


class TestInvariants:
    def test_clean_run(self, result):
        assert check_monotonic(result.trace) == []
        assert check_fifo(result.trace) == []
        assert check_prefix(result.trace) == []
        deadline = result.quiescence_time + result.topology.visibility_bound
        assert check_eventual_visibility(result.trace, deadline) == []

    def test_monotonic_catches_regression(self, result):
        trace = copy.deepcopy(result.trace)
        recs = [r for r in trace if r["dst"] == "p0.0"]
        recs[-1]["css"] = [0] * len(recs[-1]["css"])
        assert check_monotonic(trace)

    def test_prefix_catches_missing_version(self, result):
        trace = copy.deepcopy(result.trace)
        # drop one replica arrival at DC 1
        rec = next(r for r in trace if r["dst"].startswith("p1.") and any(v[3] == 0 for v in r.get("added", ())))
        rec["added"] = [v for v in rec["added"] if v[3] != 0]
        assert check_prefix(trace)

    def test_eventual_visibility_deadline(self, result):
        assert check_eventual_visibility(result.trace, result.start_time)

    def test_trace_file_roundtrip(self, result, tmp_path):
        path = tmp_path / "trace.jsonl"
        dump_trace(result.trace, path)
        assert load_trace(path) == result.trace
        assert path.read_text() == result.trace_jsonl()


class TestMetrics:
    def test_pure_function_of_trace(self, result, tmp_path):
        path = tmp_path / "trace.jsonl"
        dump_trace(result.trace, path)
        assert compute_metrics(load_trace(path)) == compute_metrics(result.trace)

    def test_counts_and_bounds(self, result):
        m = compute_metrics(result.trace)
        assert m.ops == len(result.history)
        assert m.reads == len(result.history.reads)
        assert 0 <= m.p50_latency_ms <= m.p95_latency_ms <= m.p99_latency_ms
        assert m.mean_latency_ms > 0 and all(v >= 0 for v in m.blocking_ms_by_level.values())
        assert m.messages["ReadRequest"] == m.reads
        assert set(m.throughput_per_dc) == {"0", "1"}
        total = sum(m.throughput_per_dc.values()) * m.duration_ms / 1000
        assert total == pytest.approx(m.ops)

    def test_metadata_is_vector_entries(self, result):
        # reads carry 2 vectors each way, writes 1 each way, D = 2 entries each
        m = compute_metrics(result.trace)
        assert m.metadata_entries_per_op == pytest.approx((8 * m.reads + 4 * m.writes) / m.ops)

    def test_remote_fraction_close_to_config(self):
        spec = WorkloadSpec(sessions_per_dc=6, ops_per_session=40, level_case="EC/EC", remote_fraction=0.25)
        res = run(Topology(), plan_sessions(spec, 2, 2), 2)
        # 480 Bernoulli(0.25) draws: 4 standard deviations is about 0.08
        assert abs(remote_fraction(res.trace) - 0.25) < 0.08

    def test_read_only_workload_sends_no_updates(self):
        spec = WorkloadSpec(sessions_per_dc=2, ops_per_session=5, read_ratio=1.0, level_case="EC/EC")
        m = compute_metrics(run(Topology(), plan_sessions(spec, 2, 1), 1).trace)
        assert "UpdateRequest" not in m.messages and m.writes == 0

    def test_percentile(self):
        assert percentile([], 50) == 0
        assert percentile([3.0], 99) == 3.0
        assert percentile([1, 2, 3, 4], 50) == 2
        assert percentile(list(range(1, 101)), 95) == 95

    def test_csv(self):
        text = metrics_csv([{"a": 1, "b": 2}, {"a": 3, "c": 4}])
        assert text.splitlines() == ["a,b,c", "1,2,", "3,,4"]
