"""
Benchmark Harness
=================
Times the six join strategies on the Employee x Job workloads.

* cold - every iteration starts from fresh registries and an empty join
  cache (the disk cache too, unless keep_cache is set)
* warm - one state per strategy; the first `warmup` runs are discarded and
  the next `iterations` are kept

Reflective strategies also record per-phase times (generate, compileLoad,
join); the interpretive strategy records the construction of its generic
relations separately as `construct`, outside its `total`.
"""

import csv
import gc
import io
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from src.catalog import EMPLOYEE, JOB, EMP_JOB, register_study_schemas
from src.config import BENCH_ITERATIONS, BENCH_WARMUP, BENCH_SEED, CACHE_DIR
from src.engines import (
    CorePlanCache, core_reflective_join, interpretive_join, tailored_join_employee_job,
)
from src.errors import BenchmarkError, InvalidArgument, ReflectJoinError
from src.generator import NatJoin, PhaseTimer
from src.genlang import ClassRegistry, compile_count, reset_compile_counter
from src.join_cache import JoinCache, cached_reflective_join
from src.logger import get_logger
from src.meta import SchemaRegistry
from src.relations import synthesize_dataset, to_generic
from src.utils import format_ms

logger = get_logger('bench')

# Column order of the result tables
STRATEGIES = (
    'tailored', 'interpretive', 'coreReflective', 'coreReflectiveCached',
    'reflective', 'reflectiveCached',
)
REFLECTIVE = ('reflective', 'reflectiveCached')
PHASES = ('construct', 'generate', 'compileLoad', 'join', 'total')
REGIMES = ('cold', 'warm')

# Warm runs above this result size are reported as N/A
WARM_LIMIT = 100_000

CSV_HEADER = ('strategy', 'workload', 'phase', 'regime', 'mean_ms', 'stddev_ms', 'n')


@dataclass(frozen=True)
class WorkloadSpec:
    name: str
    n1: int
    n2: int
    target: int
    seed: int = BENCH_SEED


WORKLOADS = {
    'join1': WorkloadSpec('join1', 100, 15, 153),
    'join2': WorkloadSpec('join2', 1000, 150, 12612),
    'join3': WorkloadSpec('join3', 3000, 700, 175433),
}


def workload_spec(name, seed=None):
    """Predefined workload, optionally with another seed."""
    try:
        spec = WORKLOADS[name]
    except KeyError:
        raise InvalidArgument(f"unknown workload {name!r} (expected one of {', '.join(WORKLOADS)})")
    if seed is not None:
        spec = WorkloadSpec(spec.name, spec.n1, spec.n2, spec.target, seed)
    return spec


def parse_strategies(text):
    """Comma separated strategy names, in table order; empty means all."""
    if not text:
        return list(STRATEGIES)
    wanted = [s.strip() for s in text.split(',') if s.strip()]
    unknown = [s for s in wanted if s not in STRATEGIES]
    if unknown:
        raise InvalidArgument(f"unknown strategies: {', '.join(unknown)}")
    return [s for s in STRATEGIES if s in wanted]


@dataclass(frozen=True)
class Measurement:
    strategy: str
    workload: str
    phase: str
    regime: str
    elapsed: float          # milliseconds
    iteration: int
    compilations: Optional[int] = None
    cardinality: Optional[int] = None


@dataclass(frozen=True)
class SummaryRow:
    strategy: str
    workload: str
    phase: str
    regime: str
    mean: float
    stddev: float
    n: int


class BenchmarkHarness:
    """
    Owns the engine state the strategies run against and resets it between
    cold iterations. Runs are single threaded.

    Args:
        cache_dir: directory of the persistent join cache
        keep_cache: keep disk cache entries across cold iterations
        backend: 'direct' or 'file' for the reflective strategies
        warm_limit: largest result size measured warm
    """

    def __init__(self, cache_dir=None, keep_cache=False, backend='direct', warm_limit=WARM_LIMIT):
        self.cache_dir = Path(cache_dir or CACHE_DIR)
        self.keep_cache = keep_cache
        self.backend = backend
        self.warm_limit = warm_limit
        self._datasets = {}
        self.reset_state(clear_disk=False)

    def reset_state(self, clear_disk=None):
        """Fresh registries, engines and in-memory caches."""
        self.schemas = register_study_schemas(SchemaRegistry())
        self.classes = ClassRegistry(self.schemas)
        self.natjoin = NatJoin(self.schemas, self.classes, spool=False, backend=self.backend)
        self.cache = JoinCache(self.cache_dir, self.natjoin)
        self.plan_cache = CorePlanCache()
        if clear_disk is None:
            clear_disk = not self.keep_cache
        if clear_disk:
            self.cache.clear_disk()
        reset_compile_counter()
        gc.collect()

    def dataset(self, spec):
        key = (spec.n1, spec.n2, spec.target, spec.seed)
        if key not in self._datasets:
            self._datasets[key] = synthesize_dataset(
                EMPLOYEE, JOB, spec.n1, spec.n2, spec.target, spec.seed
            )
        return self._datasets[key]

    # ---------- one timed run ----------

    def _execute(self, strategy, rel1, rel2, phases):
        if strategy == 'tailored':
            return tailored_join_employee_job(rel1, rel2)
        if strategy == 'interpretive':
            start = time.perf_counter()
            g1, g2 = to_generic(rel1), to_generic(rel2)
            phases['construct'] = (time.perf_counter() - start) * 1000.0
            return interpretive_join(g1, g2)
        if strategy == 'coreReflective':
            return core_reflective_join(rel1, rel2, EMP_JOB, self.schemas)
        if strategy == 'coreReflectiveCached':
            return core_reflective_join(rel1, rel2, EMP_JOB, self.schemas, self.plan_cache)
        if strategy not in REFLECTIVE:
            raise InvalidArgument(f"unknown strategy {strategy!r}")
        timer = PhaseTimer()
        if strategy == 'reflective':
            result = self.natjoin.nat_join(rel1, rel2, timer)
        else:
            result = cached_reflective_join(self.cache, rel1, rel2, None, timer)
        for name in ('generate', 'compileLoad', 'join'):
            phases[name] = timer.phases.get(name, 0.0)
        return result

    def run_once(self, strategy, spec, regime, iteration):
        """
        Time one join.

        Raises:
            BenchmarkError on an engine failure or a wrong result size
        """
        rel1, rel2 = self.dataset(spec)
        phases = {}
        before = compile_count()
        start = time.perf_counter()
        try:
            result = self._execute(strategy, rel1, rel2, phases)
        except ReflectJoinError as e:
            raise BenchmarkError(e.message, strategy, iteration, e) from e
        total = (time.perf_counter() - start) * 1000.0
        compilations = compile_count() - before
        if 'construct' in phases:
            total -= phases['construct']

        if len(result) != spec.target:
            raise BenchmarkError(
                f"{spec.name}: {len(result)} result tuples, expected {spec.target}",
                strategy, iteration,
            )
        rows = [Measurement(strategy, spec.name, name, regime, max(elapsed, 0.0), iteration)
                for name, elapsed in phases.items()]
        rows.append(Measurement(strategy, spec.name, 'total', regime, max(total, 0.0), iteration,
                                compilations, len(result)))
        return rows

    # ---------- regimes ----------

    def run_cold(self, spec, strategies, iterations):
        measurements = []
        for strategy in strategies:
            for i in range(iterations):
                self.reset_state()
                measurements.extend(self.run_once(strategy, spec, 'cold', i))
            logger.info(f"{spec.name} cold {strategy}: {iterations} runs")
        return measurements

    def run_warm(self, spec, strategies, iterations, warmup):
        if spec.target > self.warm_limit:
            logger.info(f"{spec.name}: skipping warm runs ({spec.target} > {self.warm_limit} tuples)")
            return []
        measurements = []
        for strategy in strategies:
            self.reset_state()
            for i in range(warmup + iterations):
                rows = self.run_once(strategy, spec, 'warm', i - warmup)
                if i >= warmup:
                    measurements.extend(rows)
            logger.info(f"{spec.name} warm {strategy}: {warmup} discarded, {iterations} kept")
        return measurements

    def run_workload(self, spec, strategies=STRATEGIES, regime='both',
                     iterations=BENCH_ITERATIONS, warmup=BENCH_WARMUP):
        """
        Measurements of `strategies` on one workload.

        Raises:
            BenchmarkError, Infeasible
        """
        if regime not in ('cold', 'warm', 'both'):
            raise InvalidArgument(f"unknown regime {regime!r}")
        if iterations < 1:
            raise InvalidArgument("iterations must be at least 1")
        logger.info(f"Benchmarking {spec.name} ({spec.n1} x {spec.n2} -> {spec.target}), "
                    f"regime={regime}, iterations={iterations}")
        measurements = []
        if regime in ('cold', 'both'):
            measurements += self.run_cold(spec, strategies, iterations)
        if regime in ('warm', 'both'):
            measurements += self.run_warm(spec, strategies, iterations, warmup)
        return measurements


def run_workload(spec, strategies=STRATEGIES, regime='both', iterations=BENCH_ITERATIONS,
                 warmup=BENCH_WARMUP, cache_dir=None, keep_cache=False, backend='direct'):
    """Convenience wrapper running one workload in a fresh harness."""
    harness = BenchmarkHarness(cache_dir, keep_cache, backend)
    return harness.run_workload(spec, strategies, regime, iterations, warmup)


# =============================================================================
# STATISTICS AND REPORTS
# =============================================================================

def summarize(measurements):
    """Mean and sample standard deviation per (strategy, workload, phase, regime)."""
    groups = {}
    for m in measurements:
        groups.setdefault((m.strategy, m.workload, m.phase, m.regime), []).append(m.elapsed)
    rows = []
    for (strategy, workload, phase, regime), values in groups.items():
        data = np.asarray(values, dtype=float)
        stddev = float(np.std(data, ddof=1)) if len(data) > 1 else 0.0
        rows.append(SummaryRow(strategy, workload, phase, regime, float(np.mean(data)),
                               stddev, len(data)))
    return rows


def render_csv(rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([row.strategy, row.workload, row.phase, row.regime,
                         f"{row.mean:.6f}", f"{row.stddev:.6f}", row.n])
    return buffer.getvalue()


def read_csv(text):
    """Parse report CSV back into SummaryRows."""
    rows = []
    for record in csv.DictReader(io.StringIO(text)):
        rows.append(SummaryRow(record['strategy'], record['workload'], record['phase'],
                               record['regime'], float(record['mean_ms']),
                               float(record['stddev_ms']), int(record['n'])))
    return rows


def render_table(rows):
    """One block per workload and regime: phases down, strategies across."""
    if not rows:
        return "No measurements.\n"
    index = {(r.strategy, r.workload, r.phase, r.regime): r for r in rows}
    workloads = list(dict.fromkeys(r.workload for r in rows))
    strategies = [s for s in STRATEGIES if any(r.strategy == s for r in rows)]
    width = max([14] + [len(s) + 2 for s in strategies])
    lines = []
    for workload in workloads:
        for regime in REGIMES:
            phases = [p for p in PHASES
                      if any((s, workload, p, regime) in index for s in strategies)]
            if not phases:
                phases = ['total']
            lines.append(f"{workload} ({regime}) - mean ms (stddev)")
            lines.append(f"{'phase':<12}" + ''.join(f"{s:>{width}}" for s in strategies))
            for phase in phases:
                cells = []
                for s in strategies:
                    row = index.get((s, workload, phase, regime))
                    if row is None:
                        cells.append(f"{'N/A':>{width}}")
                    else:
                        cells.append(f"{row.mean:.2f} ({row.stddev:.2f})".rjust(width))
                lines.append(f"{phase:<12}" + ''.join(cells))
            lines.append('')
    return '\n'.join(lines)


def report(rows, fmt='table', out=None):
    """
    Render summary rows and write them to `out` (a path) or return the text.

    Raises:
        OSError when the output cannot be written
    """
    if fmt not in ('table', 'csv'):
        raise InvalidArgument(f"unknown report format {fmt!r}")
    text = render_csv(rows) if fmt == 'csv' else render_table(rows)
    if out is not None:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        logger.info(f"Wrote {fmt} report with {len(rows)} rows to {path}")
    return text


def describe(row):
    """One-line summary of a row, for logs and the acceptance report."""
    return (f"{row.strategy}/{row.workload}/{row.phase}/{row.regime}: "
            f"{format_ms(row.mean)} +- {format_ms(row.stddev)} (n={row.n})")