"""Sweep runner: one isolated simulation cell per ``(sweep value, seed)``.

Every algorithm of a cell runs on the same topology, relations and link
draws. Results are written in a fixed order regardless of how the cells
were scheduled, so identical configs yield byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import shutil
from collections.abc import Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from p2p_topk.config import ExperimentConfig, SimulationSettings
from p2p_topk.datastore import DatabaseCatalog
from p2p_topk.metrics import CSV_COLUMNS, MetricsReport
from p2p_topk.protocol.timing import inflate_k
from p2p_topk.simkernel.engine import AlgorithmSpec, Network, QuerySpec
from p2p_topk.simkernel.trace import TraceWriter
from p2p_topk.topology import TopologyConfig, TopologyGraph, generate_topology
from p2p_topk.utils import logger, mean_and_std, sane_output_dir

log = logger.getChild("experiment")

RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.csv"
TRACE_DIR = "traces"

SWEEP_COLUMN = "sweepValue"
SUMMARY_METRICS = (
    "mFw",
    "mBw",
    "mRt",
    "bBw",
    "totalBytes",
    "responseTimeMs",
    "acQ",
    "lostLists",
    "urgentListsSent",
)
SUMMARY_NOTE = "# totalBytes counts every message kind: forwards, score-lists, items and retrieval"

# per-component seed streams of a cell
_TOPOLOGY_STREAM = 0
_DATA_STREAM = 1
_LINK_STREAM = 2
_CHURN_STREAM = 3
_ORIGINATOR_STREAM = 4

ERR_RESULTS_HEADER = "unexpected results header {header!r}"
ERR_UNKNOWN_BASELINE = "summary baseline {name!r} has no rows for sweep value {value}"


def derive_seed(seed: int, stream: int) -> int:
    """Return an independent seed for one component of the cell seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


@dataclass(frozen=True, slots=True)
class CellTask:
    """Everything one worker needs to simulate a cell.

    Attributes:
        sweep_value: Value of the swept variable.
        seed: Cell seed.
        settings: Parameters with the sweep value applied.
        algorithms: Algorithms to run, in config order.
        trace: Keep a delivery trace of every measured query.
    """

    sweep_value: float
    seed: int
    settings: SimulationSettings
    algorithms: tuple[AlgorithmSpec, ...]
    trace: bool = False


@dataclass(frozen=True, slots=True)
class CellRun:
    """Outcome of one algorithm on one cell."""

    sweep_value: float
    report: MetricsReport
    trace_lines: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class ExperimentResult:
    """Files written by :func:`run_experiment` and the rows behind them."""

    runs: tuple[CellRun, ...]
    results_path: Path
    summary_path: Path
    trace_dir: Path | None = None


def build_cell(settings: SimulationSettings, seed: int) -> tuple[TopologyGraph, DatabaseCatalog]:
    """Generate the topology and relations of the cell seeded with ``seed``."""
    graph = generate_topology(
        TopologyConfig(
            settings.n_peers,
            settings.attachment_edges,
            seed=derive_seed(seed, _TOPOLOGY_STREAM),
        )
    )
    data = dataclasses.replace(settings.data, seed=derive_seed(seed, _DATA_STREAM))
    catalog = DatabaseCatalog(data, depth=inflate_k(settings.k, settings.inflation_p))
    return graph, catalog


def pick_originator(node_count: int, seed: int) -> int:
    """Return the issuing peer of the cell seeded with ``seed``."""
    rng = np.random.default_rng(derive_seed(seed, _ORIGINATOR_STREAM))
    return int(rng.integers(node_count))


def run_cell(task: CellTask) -> list[CellRun]:
    """Simulate every algorithm of ``task`` on one shared setup.

    ``-stats`` variants first execute the same query ``settings.warmup``
    times so their neighbour statistics are populated; only the last
    execution is reported.
    """
    settings = task.settings
    graph, catalog = build_cell(settings, task.seed)
    link = dataclasses.replace(settings.link, seed=derive_seed(task.seed, _LINK_STREAM))
    churn = dataclasses.replace(settings.churn, seed=derive_seed(task.seed, _CHURN_STREAM))
    originator = pick_originator(graph.node_count, task.seed)
    runs: list[CellRun] = []
    for algorithm in task.algorithms:
        network = Network.build(graph, catalog, link, churn, settings.execution, task.seed)
        warmups = settings.warmup if algorithm.statistics else 0
        for counter in range(warmups + 1):
            query = QuerySpec(
                originator=originator,
                k=settings.k,
                ttl=settings.ttl,
                inflation_p=settings.inflation_p,
                heuristics=settings.heuristics,
                counter=counter,
            )
            measured = counter == warmups
            trace = TraceWriter() if task.trace and measured else None
            result = network.run_query(algorithm, query, trace)
        log.debug(
            "cell %s/%d %s: acQ=%.3f, %d bytes",
            task.sweep_value,
            task.seed,
            algorithm.name,
            result.report.ac_q,
            result.report.total_bytes,
        )
        lines = tuple(trace.lines) if trace is not None else ()
        runs.append(CellRun(task.sweep_value, result.report, lines))
    return runs


def plan_cells(config: ExperimentConfig, *, trace: bool = False) -> list[CellTask]:
    """Return the cells of ``config`` ordered by sweep value then seed."""
    return [
        CellTask(
            sweep_value=value,
            seed=seed,
            settings=config.settings.swept(config.sweep_variable, value),
            algorithms=config.algorithms,
            trace=trace,
        )
        for value, seed in itertools.product(config.sweep_values, config.seeds)
    ]


def execute_cells(tasks: Sequence[CellTask], jobs: int = 1) -> list[CellRun]:
    """Run ``tasks`` inline or on ``jobs`` worker processes, keeping task order."""
    if jobs <= 1 or len(tasks) <= 1:
        batches = [run_cell(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(run_cell, tasks))
    return [run for batch in batches for run in batch]


def _sort_runs(runs: Iterable[CellRun], config: ExperimentConfig) -> list[CellRun]:
    value_rank = {value: rank for rank, value in enumerate(config.sweep_values)}
    algorithm_rank = {spec.name: rank for rank, spec in enumerate(config.algorithms)}
    return sorted(
        runs,
        key=lambda run: (
            value_rank[run.sweep_value],
            algorithm_rank[run.report.algorithm],
            run.report.seed,
        ),
    )


def results_to_csv(runs: Iterable[CellRun]) -> str:
    """Serialise ``runs``: the sweep value followed by the report columns."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow((SWEEP_COLUMN, *CSV_COLUMNS))
    writer.writerows([repr(run.sweep_value), *run.report.to_row()] for run in runs)
    return buffer.getvalue()


def results_from_csv(text: str) -> list[tuple[float, MetricsReport]]:
    """Parse a document written by :func:`results_to_csv`."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != (SWEEP_COLUMN, *CSV_COLUMNS):
        raise ValueError(ERR_RESULTS_HEADER.format(header=rows[0] if rows else None))
    return [(float(row[0]), MetricsReport.from_row(row[1:])) for row in rows[1:] if row]


def _metric_values(report: MetricsReport) -> dict[str, float]:
    return {
        "mFw": report.m_fw,
        "mBw": report.m_bw,
        "mRt": report.m_rt,
        "bBw": report.b_bw,
        "totalBytes": report.total_bytes,
        "responseTimeMs": report.response_time_ms,
        "acQ": report.ac_q,
        "lostLists": report.lost_lists,
        "urgentListsSent": report.urgent_lists_sent,
    }


def summarize(runs: Sequence[CellRun], baseline: str | None = None) -> str:
    """Return per-cell mean and standard deviation of every metric.

    With ``baseline`` set, ``bytesReductionPct`` gives how much lower the
    mean ``totalBytes`` of each algorithm is than the baseline's at the
    same sweep value.
    """
    groups: dict[tuple[float, str], list[dict[str, float]]] = {}
    for run in runs:
        groups.setdefault((run.sweep_value, run.report.algorithm), []).append(
            _metric_values(run.report)
        )
    buffer = io.StringIO()
    buffer.write(SUMMARY_NOTE + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    header = [SWEEP_COLUMN, "algorithm", "runs"]
    for metric in SUMMARY_METRICS:
        header.extend((f"{metric}Mean", f"{metric}Std"))
    header.append("bytesReductionPct")
    writer.writerow(header)
    for (value, algorithm), samples in groups.items():
        row = [repr(value), algorithm, str(len(samples))]
        for metric in SUMMARY_METRICS:
            mean, std = mean_and_std(sample[metric] for sample in samples)
            row.extend((repr(mean), repr(std)))
        row.append(_reduction(groups, value, algorithm, baseline))
        writer.writerow(row)
    return buffer.getvalue()


def _reduction(
    groups: dict[tuple[float, str], list[dict[str, float]]],
    value: float,
    algorithm: str,
    baseline: str | None,
) -> str:
    if baseline is None:
        return ""
    reference = groups.get((value, baseline))
    if reference is None:
        raise ValueError(ERR_UNKNOWN_BASELINE.format(name=baseline, value=value))
    base_mean, _ = mean_and_std(sample["totalBytes"] for sample in reference)
    mean, _ = mean_and_std(sample["totalBytes"] for sample in groups[(value, algorithm)])
    if base_mean == 0:
        return ""
    return repr(100.0 * (base_mean - mean) / base_mean)


def _write_traces(trace_dir: Path, runs: Iterable[CellRun]) -> None:
    trace_dir.mkdir(parents=True, exist_ok=True)
    for run in runs:
        name = f"{run.sweep_value!r}_{run.report.seed}_{run.report.algorithm}.tsv"
        text = "".join(line + "\n" for line in run.trace_lines)
        (trace_dir / name).write_text(text, encoding="utf-8")


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | Path | None = None,
    *,
    jobs: int = 1,
    trace: bool = False,
) -> ExperimentResult:
    """Run every cell of ``config`` and write the results and summary files.

    ``out_dir`` overrides ``config.output_path``. Files written before a
    failure are removed again.
    """
    target = sane_output_dir(out_dir or config.output_path)
    tasks = plan_cells(config, trace=trace)
    log.info(
        "running %d cells x %d algorithms into %s", len(tasks), len(config.algorithms), target
    )
    results_path = target / RESULTS_FILE
    summary_path = target / SUMMARY_FILE
    trace_dir = target / TRACE_DIR if trace else None
    try:
        runs = _sort_runs(execute_cells(tasks, jobs), config)
        results_path.write_text(results_to_csv(runs), encoding="utf-8")
        summary_path.write_text(summarize(runs, config.summary_baseline), encoding="utf-8")
        if trace_dir is not None:
            _write_traces(trace_dir, runs)
    except BaseException:
        log.warning("experiment failed, removing partial output in %s", target)
        results_path.unlink(missing_ok=True)
        summary_path.unlink(missing_ok=True)
        if trace_dir is not None:
            shutil.rmtree(trace_dir, ignore_errors=True)
        raise
    log.info("wrote %d rows to %s", len(runs), results_path)
    return ExperimentResult(tuple(runs), results_path, summary_path, trace_dir)


__all__ = [
    "CellRun",
    "CellTask",
    "ExperimentResult",
    "build_cell",
    "derive_seed",
    "execute_cells",
    "pick_originator",
    "plan_cells",
    "results_from_csv",
    "results_to_csv",
    "run_cell",
    "run_experiment",
    "summarize",
]
