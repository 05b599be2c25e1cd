"""Run orchestration: config in, history + trace + metrics out."""

from __future__ import annotations

from pathlib import Path

from .config import RunConfig, with_axis
from .metrics import MetricsReport, compute_metrics, metrics_json
from .simnet import SimResult, run
from .trace import dump_trace
from .workload import plan_sessions


def run_workload(cfg: RunConfig) -> tuple[SimResult, MetricsReport]:
    plans = plan_sessions(cfg.workload, cfg.topology.n_dcs, cfg.seed)
    result = run(cfg.topology, plans, cfg.seed, cfg.workload.think_time)
    return result, compute_metrics(result.trace)


def write_outputs(result: SimResult, metrics: MetricsReport, outdir: str | Path) -> dict[str, Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "history": out / "history.jsonl",
        "trace": out / "trace.jsonl",
        "metrics": out / "metrics.json",
    }
    paths["history"].write_text(result.history.to_jsonl())
    dump_trace(result.trace, paths["trace"])
    paths["metrics"].write_text(metrics_json(metrics))
    return paths


def sweep(cfg: RunConfig, axis: str, values: list) -> list[dict]:
    """One run per axis value, all with the config's seed; returns CSV rows."""
    rows = []
    for value in values:
        point = with_axis(cfg, axis, value)
        _, metrics = run_workload(point)
        rows.append({"axis": axis, "value": value, "seed": point.seed, **metrics.flat()})
    return rows
