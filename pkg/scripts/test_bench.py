"""Benchmark harness, statistics and report rendering."""

import math

import pytest

from src.bench import (
    CSV_HEADER, STRATEGIES, WORKLOADS, BenchmarkHarness, Measurement, SummaryRow,
    WorkloadSpec, describe, parse_strategies, read_csv, render_csv, render_table, report,
    run_workload, summarize, workload_spec,
)
from src.errors import BenchmarkError, InvalidArgument

TINY = WorkloadSpec('tiny', 30, 8, 20, seed=4)


def measurement(strategy, elapsed, phase='total', regime='cold', workload='join1'):
    return Measurement(strategy, workload, phase, regime, elapsed, 0)


def totals(measurements, strategy, regime):
    return [m for m in measurements
            if m.strategy == strategy and m.regime == regime and m.phase == 'total']


# =============================================================================
# WORKLOADS AND ARGUMENTS
# =============================================================================

def test_predefined_workloads():
    assert [(w.n1, w.n2, w.target) for w in WORKLOADS.values()] == \
        [(100, 15, 153), (1000, 150, 12612), (3000, 700, 175433)]


def test_workload_spec():
    assert workload_spec('join2').target == 12612
    assert workload_spec('join1', seed=5).seed == 5
    with pytest.raises(InvalidArgument):
        workload_spec('join9')


def test_parse_strategies():
    assert parse_strategies('') == list(STRATEGIES)
    assert parse_strategies('reflective, tailored') == ['tailored', 'reflective']
    with pytest.raises(InvalidArgument):
        parse_strategies('tailored,fast')


# =============================================================================
# STATISTICS
# =============================================================================

def test_summary_mean_and_sample_stddev():
    rows = summarize([measurement('tailored', 1.0), measurement('tailored', 3.0)])
    assert len(rows) == 1
    assert rows[0].mean == pytest.approx(2.0)
    assert rows[0].stddev == pytest.approx(math.sqrt(2.0))
    assert rows[0].n == 2


def test_single_sample_has_zero_stddev():
    (row,) = summarize([measurement('tailored', 4.5)])
    assert (row.mean, row.stddev, row.n) == (4.5, 0.0, 1)


def test_summary_groups_in_first_seen_order():
    rows = summarize([
        measurement('reflective', 1.0, phase='join'),
        measurement('tailored', 2.0),
        measurement('reflective', 3.0, phase='join'),
    ])
    assert [(r.strategy, r.phase, r.n) for r in rows] == [('reflective', 'join', 2), ('tailored', 'total', 1)]


# =============================================================================
# REPORTS
# =============================================================================

ROWS = [
    SummaryRow('tailored', 'join1', 'total', 'cold', 1.0, 0.1, 10),
    SummaryRow('reflective', 'join1', 'join', 'cold', 2.0, 0.0, 10),
    SummaryRow('reflective', 'join1', 'total', 'cold', 3.25, 0.5, 10),
]


def test_csv_header_and_round_trip():
    text = render_csv(ROWS)
    assert text.splitlines()[0] == ','.join(CSV_HEADER)
    assert read_csv(text) == ROWS


def test_table_marks_missing_cells():
    table = render_table(ROWS)
    lines = table.splitlines()
    assert lines[0] == "join1 (cold) - mean ms (stddev)"
    join_row = next(line for line in lines if line.startswith('join '))
    assert 'N/A' in join_row and '2.00 (0.00)' in join_row
    assert "join1 (warm) - mean ms (stddev)" in lines
    assert table.index('tailored') < table.index('reflective')


def test_empty_table():
    assert render_table([]) == "No measurements.\n"


def test_report_writes_file(tmp_path):
    out = tmp_path / 'reports' / 'bench.csv'
    text = report(ROWS, 'csv', out)
    assert out.read_text(encoding='utf-8') == text
    with pytest.raises(InvalidArgument):
        report(ROWS, 'xml')


def test_describe():
    assert describe(ROWS[2]) == "reflective/join1/total/cold: 3.25 ms +- 500 us (n=10)"


# =============================================================================
# HARNESS
# =============================================================================

@pytest.fixture
def harness(tmp_path):
    return BenchmarkHarness(tmp_path / 'joins')


def test_every_strategy_reaches_the_target(harness):
    measurements = harness.run_workload(TINY, STRATEGIES, 'both', iterations=2, warmup=1)
    for strategy in STRATEGIES:
        for regime in ('cold', 'warm'):
            rows = totals(measurements, strategy, regime)
            assert len(rows) == 2
            assert all(m.cardinality == 20 and m.elapsed >= 0.0 for m in rows)


def test_compilations_per_strategy(harness):
    measurements = harness.run_workload(TINY, STRATEGIES, 'both', iterations=2, warmup=1)
    compiled = {(m.strategy, m.regime): m.compilations
                for m in measurements if m.phase == 'total'}
    assert compiled[('reflective', 'cold')] == 2
    assert compiled[('reflective', 'warm')] == 2
    assert compiled[('reflectiveCached', 'cold')] == 2
    assert compiled[('reflectiveCached', 'warm')] == 0
    assert compiled[('tailored', 'cold')] == 0


def test_phase_breakdown(harness):
    measurements = harness.run_workload(TINY, ['interpretive', 'reflective'], 'cold', iterations=1)
    phases = {(m.strategy, m.phase) for m in measurements}
    assert ('interpretive', 'construct') in phases
    assert {('reflective', p) for p in ('generate', 'compileLoad', 'join', 'total')} <= phases


def test_kept_cache_survives_cold_iterations(tmp_path):
    harness = BenchmarkHarness(tmp_path / 'joins', keep_cache=True)
    measurements = harness.run_workload(TINY, ['reflectiveCached'], 'cold', iterations=2)
    assert [m.compilations for m in totals(measurements, 'reflectiveCached', 'cold')] == [2, 0]


def test_warm_runs_skipped_above_limit(tmp_path):
    harness = BenchmarkHarness(tmp_path / 'joins', warm_limit=10)
    assert harness.run_workload(TINY, ['tailored'], 'warm', iterations=1, warmup=0) == []


def test_wrong_cardinality_is_an_error(harness, monkeypatch, employees, jobs):
    monkeypatch.setattr(harness, 'dataset', lambda spec: (employees, jobs))
    with pytest.raises(BenchmarkError) as info:
        harness.run_once('tailored', TINY, 'cold', 0)
    assert info.value.strategy == 'tailored'


def test_engine_failure_is_tagged(harness, monkeypatch, jobs):
    monkeypatch.setattr(harness, 'dataset', lambda spec: (jobs, jobs))
    with pytest.raises(BenchmarkError) as info:
        harness.run_once('coreReflective', TINY, 'cold', 3)
    assert info.value.iteration == 3
    assert info.value.cause.kind == 'interface_mismatch'


def test_bad_arguments(harness):
    with pytest.raises(InvalidArgument):
        harness.run_workload(TINY, ['tailored'], 'lukewarm', iterations=1)
    with pytest.raises(InvalidArgument):
        harness.run_workload(TINY, ['tailored'], 'cold', iterations=0)


def test_module_wrapper(tmp_path):
    measurements = run_workload(WORKLOADS['join1'], ['tailored', 'reflectiveCached'], 'cold',
                                iterations=1, cache_dir=tmp_path / 'joins')
    assert {m.cardinality for m in measurements if m.phase == 'total'} == {153}
