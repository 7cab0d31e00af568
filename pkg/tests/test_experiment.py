from __future__ import annotations

import csv
import io

import pytest

from p2p_topk import experiment
from p2p_topk.experiment import (
    RESULTS_FILE,
    SUMMARY_FILE,
    SUMMARY_NOTE,
    build_cell,
    derive_seed,
    pick_originator,
    plan_cells,
    results_from_csv,
    results_to_csv,
    run_experiment,
)
from p2p_topk.validation import validate_config

SMALL_EXPERIMENT = """
sweep.variable = nPeers
sweep.values = 30, 40
algo.list = fd-basic, fd-str12, cn
seed.list = 1, 2
k = 5
data.tupleCountMin = 30
data.tupleCountMax = 60
data.payloadMeanBytes = 100
summary.baseline = cn
"""


@pytest.fixture
def config():
    return validate_config(SMALL_EXPERIMENT)


def _summary_rows(text: str) -> list[dict[str, str]]:
    note, _, body = text.partition("\n")
    assert note == SUMMARY_NOTE
    return list(csv.DictReader(io.StringIO(body)))


def test_derive_seed_is_stable_and_separates_streams():
    assert derive_seed(1, 0) == derive_seed(1, 0)
    assert len({derive_seed(1, stream) for stream in range(5)}) == 5
    assert derive_seed(1, 0) != derive_seed(2, 0)


def test_pick_originator_in_range():
    picks = {pick_originator(50, seed) for seed in range(20)}
    assert all(0 <= peer < 50 for peer in picks)
    assert len(picks) > 1


def test_plan_orders_cells_by_value_then_seed(config):
    tasks = plan_cells(config)
    assert [(task.sweep_value, task.seed) for task in tasks] == [
        (30.0, 1),
        (30.0, 2),
        (40.0, 1),
        (40.0, 2),
    ]
    assert [task.settings.n_peers for task in tasks] == [30, 30, 40, 40]


def test_build_cell_sizes_catalog_for_inflated_k(config):
    settings = config.settings
    graph, catalog = build_cell(settings.swept(config.sweep_variable, 30), seed=1)
    assert graph.node_count == 30
    assert catalog.depth == settings.k


def test_run_writes_results_and_summary(config, tmp_path):
    result = run_experiment(config, tmp_path)
    assert result.results_path == tmp_path.resolve() / RESULTS_FILE
    rows = results_from_csv(result.results_path.read_text(encoding="utf-8"))
    assert len(rows) == 2 * 2 * 3
    assert [(value, report.algorithm, report.seed) for value, report in rows[:3]] == [
        (30.0, "fd-basic", 1),
        (30.0, "fd-basic", 2),
        (30.0, "fd-str12", 1),
    ]
    assert all(report.n_peers == int(value) for value, report in rows)
    assert all(report.ac_q == 1.0 for _, report in rows)
    assert result.trace_dir is None


def test_summary_reports_reduction_against_baseline(config, tmp_path):
    result = run_experiment(config, tmp_path)
    rows = _summary_rows(result.summary_path.read_text(encoding="utf-8"))
    assert len(rows) == 2 * 3
    cn_rows = [row for row in rows if row["algorithm"] == "cn"]
    assert all(row["bytesReductionPct"] == "0.0" for row in cn_rows)
    fd = next(row for row in rows if row["algorithm"] == "fd-basic")
    assert fd["runs"] == "2"
    assert float(fd["acQMean"]) == 1.0
    assert float(fd["acQStd"]) == 0.0


def test_identical_configs_give_identical_files(config, tmp_path):
    first = run_experiment(config, tmp_path / "a")
    second = run_experiment(config, tmp_path / "b")
    assert first.results_path.read_bytes() == second.results_path.read_bytes()
    assert first.summary_path.read_bytes() == second.summary_path.read_bytes()


@pytest.mark.slow
def test_worker_processes_do_not_change_results(config, tmp_path):
    inline = run_experiment(config, tmp_path / "inline")
    pooled = run_experiment(config, tmp_path / "pooled", jobs=2)
    assert inline.results_path.read_bytes() == pooled.results_path.read_bytes()


def test_results_csv_round_trip(config):
    runs = experiment.execute_cells(plan_cells(config)[:1])
    parsed = results_from_csv(results_to_csv(runs))
    assert parsed == [(run.sweep_value, run.report) for run in runs]


def test_results_csv_rejects_foreign_header():
    with pytest.raises(ValueError, match="unexpected results header"):
        results_from_csv("seed,algorithm\n")


def test_traces_written_per_measured_query(config, tmp_path):
    result = run_experiment(config, tmp_path, trace=True)
    assert result.trace_dir is not None
    files = sorted(result.trace_dir.iterdir())
    assert len(files) == len(result.runs)
    assert files[0].read_text(encoding="utf-8").count("\tFORWARD\t") > 0


def test_stats_variants_warm_up_before_measuring(tmp_path):
    text = SMALL_EXPERIMENT.replace(
        "algo.list = fd-basic, fd-str12, cn", "algo.list = fd-basic-stats"
    ).replace("summary.baseline = cn", "heuristic.warmup = 2")
    result = run_experiment(validate_config(text), tmp_path)
    assert {run.report.algorithm for run in result.runs} == {"fd-basic-stats"}
    assert len(result.runs) == 4


def test_failure_removes_partial_output(config, tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("summary failed")

    monkeypatch.setattr(experiment, "summarize", boom)
    with pytest.raises(RuntimeError, match="summary failed"):
        run_experiment(config, tmp_path)
    assert not (tmp_path / RESULTS_FILE).exists()
    assert not (tmp_path / SUMMARY_FILE).exists()
