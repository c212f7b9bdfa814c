#!/usr/bin/env python3
"""
=============================================================================
  reflectjoin - Acceptance Report
=============================================================================
  Runs the study workloads through every strategy and checks the outcomes a
  release is expected to show: exact result sizes, compilation counts of the
  cached strategies, and the relative cost trends between strategies.

  Usage:
      python scripts/acceptance_report.py [--iterations N] [--skip-join3]
                                          [--cache-dir PATH]
=============================================================================
"""

import argparse
import os
import sys
import tempfile
from datetime import datetime

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.bench import (
    STRATEGIES, WORKLOADS, BenchmarkHarness, describe, summarize,
)
from src.catalog import EMPLOYEE, JOB
from src.errors import ReflectJoinError
from src.generator import generate_join, generate_res_class, generated_line_count
from src.logger import get_logger
from src.meta import common_attributes, union_attributes

logger = get_logger('acceptance')

# Reference size of the hand-written generator output for Employee x Job
REFERENCE_GENERATED_LINES = 78

# ===== Report Data =====
REPORT = []
SECTION_RESULTS = {}
current_section = ""
test_counter = 0


def section(name):
    global current_section
    current_section = name
    SECTION_RESULTS[name] = {"pass": 0, "fail": 0, "skip": 0}
    print(f"\n{'─' * 70}\n  {name}\n{'─' * 70}")


def record(test_id, name, status, expected="", actual=""):
    global test_counter
    test_counter += 1
    REPORT.append({
        "no": test_counter,
        "section": current_section,
        "test_id": test_id,
        "name": name,
        "status": status,  # PASS / FAIL / SKIP
        "expected": expected,
        "actual": actual,
    })
    icon = {"PASS": "✅", "FAIL": "❌", "SKIP": "⏭️"}.get(status, "❓")
    SECTION_RESULTS[current_section][status.lower()] += 1

    print(f"  {icon} [{test_id}] {name}")
    if status == "FAIL":
        print(f"      Expected: {expected}")
        print(f"      Actual:   {actual}")


def check(test_id, name, ok, expected="", actual=""):
    record(test_id, name, "PASS" if ok else "FAIL", expected, actual)


def mean_of(rows, strategy, workload, phase, regime):
    for row in rows:
        if (row.strategy, row.workload, row.phase, row.regime) == (strategy, workload, phase, regime):
            return row
    return None


# =============================================================================
# SECTIONS
# =============================================================================

def check_cardinalities(harness, names, iterations):
    section("A. Result sizes")
    measurements = {}
    for n, name in enumerate(names, start=1):
        spec = WORKLOADS[name]
        try:
            rows = harness.run_workload(spec, STRATEGIES, 'both', iterations, warmup=1)
        except ReflectJoinError as e:
            logger.error(f"{name} failed: {e.message}")
            record(f"A-{n:02d}", f"{name}: every strategy returns {spec.target} tuples", "FAIL",
                   f"{spec.target} tuples", f"{e.kind}: {e.message}")
            continue
        measurements[name] = rows
        sizes = {m.cardinality for m in rows if m.phase == 'total'}
        check(f"A-{n:02d}", f"{name}: every strategy returns {spec.target} tuples",
              sizes == {spec.target}, spec.target, sorted(sizes))
    return measurements


def check_compilations(measurements):
    section("B. Compilation counts")
    n = 0
    for name, rows in measurements.items():
        compiled = {}
        for m in rows:
            if m.phase == 'total':
                compiled.setdefault((m.strategy, m.regime), set()).add(m.compilations)
        n += 1
        check(f"B-{n:02d}", f"{name}: reflective compiles two classes per call",
              compiled.get(('reflective', 'cold')) == {2}, {2}, compiled.get(('reflective', 'cold')))
        n += 1
        warm = compiled.get(('reflectiveCached', 'warm'))
        if warm is None:
            record(f"B-{n:02d}", f"{name}: warm cached reflective compiles nothing", "SKIP")
        else:
            check(f"B-{n:02d}", f"{name}: warm cached reflective compiles nothing",
                  warm == {0}, {0}, warm)
        n += 1
        static = set()
        for strategy in ('tailored', 'interpretive', 'coreReflective', 'coreReflectiveCached'):
            static |= compiled.get((strategy, 'cold'), set())
        check(f"B-{n:02d}", f"{name}: static strategies compile nothing", static == {0}, {0}, static)


def check_trends(measurements):
    section("C. Cost trends")
    rows = summarize([m for ms in measurements.values() for m in ms])
    for row in rows:
        if row.phase == 'total':
            logger.info(describe(row))
    names = list(measurements)
    n = 0
    if 'join1' in measurements:
        tailored = mean_of(rows, 'tailored', 'join1', 'total', 'cold')
        reflective = mean_of(rows, 'reflective', 'join1', 'total', 'cold')
        n += 1
        check(f"C-{n:02d}", "join1: reflective costs at least 5x tailored (cold)",
              reflective.mean >= 5 * tailored.mean,
              f">= {5 * tailored.mean:.2f} ms", f"{reflective.mean:.2f} ms")

    if 'join1' in measurements and 'join2' in measurements:
        for phase in ('generate', 'compileLoad'):
            small = mean_of(rows, 'reflective', 'join1', phase, 'cold')
            large = mean_of(rows, 'reflective', 'join2', phase, 'cold')
            n += 1
            ratio = max(small.mean, large.mean) / max(min(small.mean, large.mean), 1e-9)
            check(f"C-{n:02d}", f"{phase} cost stays flat from join1 to join2",
                  ratio < 3.0, "< 3x", f"{ratio:.1f}x")
        small = mean_of(rows, 'reflective', 'join1', 'join', 'cold')
        large = mean_of(rows, 'reflective', 'join2', 'join', 'cold')
        n += 1
        ratio = large.mean / max(small.mean, 1e-9)
        check(f"C-{n:02d}", "join phase grows from join1 to join2",
              ratio > 10.0, "> 10x", f"{ratio:.1f}x")

    if names:
        first = names[0]
        tailored = mean_of(rows, 'tailored', first, 'total', 'warm')
        cached = mean_of(rows, 'reflectiveCached', first, 'total', 'warm')
        n += 1
        if tailored and cached:
            check(f"C-{n:02d}", f"{first}: warm cached reflective within 2.5x of tailored",
                  cached.mean <= 2.5 * tailored.mean,
                  f"<= {2.5 * tailored.mean:.2f} ms", f"{cached.mean:.2f} ms")
        else:
            record(f"C-{n:02d}", f"{first}: warm cached reflective within 2.5x of tailored", "SKIP")

        last = names[-1]
        interpretive = mean_of(rows, 'interpretive', last, 'total', 'cold')
        core = mean_of(rows, 'coreReflective', last, 'total', 'cold')
        reflective = mean_of(rows, 'reflective', last, 'total', 'cold')
        if interpretive and core and reflective:
            n += 1
            check(f"C-{n:02d}", f"{last}: reflective beats interpretive (cold)",
                  reflective.mean < interpretive.mean,
                  f"< {interpretive.mean:.2f} ms", f"{reflective.mean:.2f} ms")
            n += 1
            check(f"C-{n:02d}", f"{last}: reflective beats core reflective (cold)",
                  reflective.mean < core.mean,
                  f"< {core.mean:.2f} ms", f"{reflective.mean:.2f} ms")


def check_generated_size():
    section("D. Generated code")
    common = common_attributes(EMPLOYEE, JOB)
    union = union_attributes(EMPLOYEE, JOB)
    sources = [generate_join('JoinEJ', 'ResEJ', EMPLOYEE, JOB, common, union),
               generate_res_class('ResEJ', None, union)]
    lines = generated_line_count(sources)
    check("D-01", "Employee x Job generator output is no longer than the reference",
          lines <= REFERENCE_GENERATED_LINES, f"<= {REFERENCE_GENERATED_LINES} lines", lines)


def print_report():
    total_pass = sum(s["pass"] for s in SECTION_RESULTS.values())
    total_fail = sum(s["fail"] for s in SECTION_RESULTS.values())
    total_skip = sum(s["skip"] for s in SECTION_RESULTS.values())

    print(f"\n{'=' * 70}")
    print("  SUMMARY")
    print(f"{'=' * 70}")
    for name, counts in SECTION_RESULTS.items():
        print(f"  {name:<30} pass={counts['pass']:<3} fail={counts['fail']:<3} "
              f"skip={counts['skip']}")
    print(f"\n  Total: {total_pass} passed, {total_fail} failed, {total_skip} skipped")

    if total_fail:
        print(f"\n{'=' * 70}")
        print("  ❌ FAILED")
        print(f"{'=' * 70}")
        for r in REPORT:
            if r['status'] == 'FAIL':
                print(f"  ❌ [{r['test_id']}] {r['name']}")
                print(f"     Expected: {r['expected']}")
                print(f"     Actual:   {r['actual']}")
    else:
        print("\n  🎉 All checks passed!")
    print(f"\n  Finished {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n")
    return total_fail


def main():
    parser = argparse.ArgumentParser(
        description='Acceptance checks over the study workloads',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__
    )
    parser.add_argument('--iterations', type=int, default=5)
    parser.add_argument('--skip-join3', action='store_true')
    parser.add_argument('--cache-dir', default=None,
                        help='Join cache directory (default: a scratch directory)')
    args = parser.parse_args()

    names = [n for n in WORKLOADS if not (args.skip_join3 and n == 'join3')]
    print("=" * 70)
    print("  REFLECTJOIN - ACCEPTANCE REPORT")
    print(f"  Workloads: {', '.join(names)}   Iterations: {args.iterations}")
    print("=" * 70)

    with tempfile.TemporaryDirectory(prefix='reflectjoin-accept-') as scratch:
        harness = BenchmarkHarness(args.cache_dir or os.path.join(scratch, 'joins'))
        measurements = check_cardinalities(harness, names, args.iterations)
        check_compilations(measurements)
        check_trends(measurements)
        check_generated_size()

    return 1 if print_report() else 0


if __name__ == '__main__':
    sys.exit(main())
