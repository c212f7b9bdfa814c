"""
reflectjoin - natural joins through runtime-generated code, and the harness
that compares them with the static alternatives.

Usage:
    python run.py bench [--workload join1|join2|join3|all] [--strategies LIST]
                        [--regime cold|warm|both] [--iterations N] [--seed S]
                        [--cache-dir PATH] [--keep-cache] [--format table|csv]
                        [--out PATH] [--backend direct|file] [--skip-join3]
    python run.py join --left FILE --right FILE --strategy S [--interface NAME] [--print]
    python run.py spool [--dir PATH | --off]

Examples:
    python run.py bench --workload join1 --regime warm
    python run.py bench --workload all --skip-join3 --format csv --out reports/bench.csv
    python run.py join --left data/join1_employee.rel --right data/join1_job.rel --strategy reflective --print
    python run.py spool --dir spool

Exit status: 0 on success, 1 when a join or its inputs fail, 2 on usage errors.
"""

import argparse
import os
import sys

# Add the project root to the Python path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.bench import (
    BenchmarkHarness, STRATEGIES, WORKLOADS, parse_strategies, report, summarize, workload_spec,
)
from src.catalog import register_study_schemas
from src.config import BENCH_ITERATIONS, BENCH_WARMUP, CACHE_DIR, load_spool_state, save_spool_state
from src.engines import core_reflective_join, interpretive_join, tailored_join
from src.errors import InvalidArgument, ReflectJoinError
from src.generator import NatJoin
from src.genlang import ClassRegistry
from src.join_cache import JoinCache, cached_reflective_join
from src.logger import get_logger
from src.meta import SchemaDescriptor, SchemaRegistry, union_attributes
from src.relations import load_relation_file, to_generic

logger = get_logger('cli')

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog='reflectjoin',
        description='Natural joins through runtime-generated code',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    commands = parser.add_subparsers(dest='command', required=True)

    bench = commands.add_parser('bench', help='Run the join benchmark')
    bench.add_argument('--workload', default='join1', choices=[*WORKLOADS, 'all'])
    bench.add_argument('--strategies', default='',
                       help=f"Comma separated subset of {','.join(STRATEGIES)}")
    bench.add_argument('--regime', default='both', choices=['cold', 'warm', 'both'])
    bench.add_argument('--iterations', type=int, default=BENCH_ITERATIONS)
    bench.add_argument('--warmup', type=int, default=BENCH_WARMUP,
                       help='Warm runs discarded before measuring')
    bench.add_argument('--seed', type=int, default=None)
    bench.add_argument('--cache-dir', default=CACHE_DIR)
    bench.add_argument('--keep-cache', action='store_true',
                       help='Keep disk cache entries across cold iterations')
    bench.add_argument('--format', dest='fmt', default='table', choices=['table', 'csv'])
    bench.add_argument('--out', default=None, help='Write the report here instead of stdout')
    bench.add_argument('--backend', default='direct', choices=['direct', 'file'])
    bench.add_argument('--skip-join3', action='store_true',
                       help='Leave out the largest workload')

    join = commands.add_parser('join', help='Join two relation files once')
    join.add_argument('--left', required=True)
    join.add_argument('--right', required=True)
    join.add_argument('--strategy', required=True, choices=STRATEGIES)
    join.add_argument('--interface', default=None,
                      help='Registered schema the result tuples implement')
    join.add_argument('--print', dest='print_rows', action='store_true',
                      help='Print the result tuples')
    join.add_argument('--cache-dir', default=CACHE_DIR)

    spool = commands.add_parser('spool', help='Toggle spooling of generated sources')
    toggle = spool.add_mutually_exclusive_group()
    toggle.add_argument('--dir', default=None, help='Enable spooling into this directory')
    toggle.add_argument('--off', action='store_true', help='Disable spooling')
    return parser


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_bench(args):
    if args.iterations < 1:
        raise InvalidArgument("--iterations must be at least 1")
    if args.warmup < 0:
        raise InvalidArgument("--warmup must not be negative")
    strategies = parse_strategies(args.strategies)
    names = list(WORKLOADS) if args.workload == 'all' else [args.workload]
    if args.skip_join3:
        names = [n for n in names if n != 'join3']
    harness = BenchmarkHarness(args.cache_dir, args.keep_cache, args.backend)
    measurements = []
    for name in names:
        spec = workload_spec(name, args.seed)
        measurements += harness.run_workload(spec, strategies, args.regime,
                                             args.iterations, args.warmup)
    text = report(summarize(measurements), args.fmt, args.out)
    if args.out is None:
        sys.stdout.write(text)
    else:
        print(f"✅ Report written to {args.out}")
    return EXIT_OK


def _render(names, rows):
    return ''.join(
        ', '.join(f"{n}={v}" for n, v in zip(names, row)) + '\n' for row in rows
    )


def _result_schema(schemas, left, right, interface):
    if interface is not None:
        return schemas.lookup(interface)
    union = union_attributes(left, right)
    return schemas.register(SchemaDescriptor(f"{left.class_name}{right.class_name}Row", tuple(union)))


def run_join(args, out=None):
    out = out or sys.stdout
    schemas = register_study_schemas(SchemaRegistry())
    rel1 = load_relation_file(args.left, schemas)
    rel2 = load_relation_file(args.right, schemas)
    strategy = args.strategy
    natjoin = NatJoin(schemas, ClassRegistry(schemas))

    if strategy == 'interpretive':
        result = interpretive_join(to_generic(rel1), to_generic(rel2))
    elif strategy == 'tailored':
        result = tailored_join(rel1, rel2)
    elif strategy in ('coreReflective', 'coreReflectiveCached'):
        schema = _result_schema(schemas, rel1.schema, rel2.schema, args.interface)
        result = core_reflective_join(rel1, rel2, schema, schemas)
    elif strategy == 'reflective':
        result = natjoin.nat_join_with_interface(rel1, rel2, args.interface)
    else:
        cache = JoinCache(args.cache_dir, natjoin)
        result = cached_reflective_join(cache, rel1, rel2, args.interface)

    if args.print_rows:
        if strategy == 'interpretive':
            out.write(_render(result.attribute_names,
                              [[v.payload for v in row] for row in result.rows]))
        elif strategy.startswith('reflective'):
            # printed by a generated printer class
            out.write(natjoin.print_relation(result))
        else:
            out.write(_render(result.schema.attribute_names, [t.values for t in result.tuples]))
    out.write(f"{len(result)} tuples ({strategy})\n")
    logger.info(f"join {args.left} x {args.right} with {strategy}: {len(result)} tuples")
    return EXIT_OK


def cmd_spool(args):
    if args.off:
        _, directory = load_spool_state()
        save_spool_state(False, directory)
        print("Spooling disabled")
    elif args.dir is not None:
        save_spool_state(True, os.path.abspath(args.dir))
        print(f"Spooling generated sources to {os.path.abspath(args.dir)}")
    else:
        enabled, directory = load_spool_state()
        print(f"Spooling {'enabled' if enabled else 'disabled'} ({directory})")
    return EXIT_OK


COMMANDS = {'bench': cmd_bench, 'join': run_join, 'spool': cmd_spool}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InvalidArgument as e:
        print(f"❌ {e.message}", file=sys.stderr)
        return EXIT_USAGE
    except ReflectJoinError as e:
        logger.error(f"{args.command} failed: {e.message}")
        print(f"❌ {e.kind}: {e.message}", file=sys.stderr)
        return EXIT_FAILED
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
