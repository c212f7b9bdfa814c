"""
Dataset Generator for the join workloads
Writes the synthesized Employee/Job relations of each workload to relation
files, plus a Salary relation matching the posts of each Job relation, so
the one-shot `join` command can be run on files.

Files written (into the data directory unless --out is given):
    <workload>_employee.rel, <workload>_job.rel, <workload>_salary.rel

Usage:
    python scripts/generate_datasets.py [options]

Options:
    --workload <name>   join1, join2, join3 or all (default: all)
    --seed <n>          Synthesis seed (default: RJ_BENCH_SEED)
    --out <dir>         Output directory (default: RJ_DATA_DIR)
    --skip-join3        Leave out the largest workload

Examples:
    python scripts/generate_datasets.py --workload join1
    python scripts/generate_datasets.py --skip-join3 --out /tmp/relations
"""

import sys
import os
import argparse
from pathlib import Path

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np

from src.bench import WORKLOADS, workload_spec
from src.catalog import EMPLOYEE, JOB, SALARY
from src.config import DATA_DIR, BENCH_SEED
from src.errors import ReflectJoinError
from src.logger import get_logger
from src.relations import synthesize_dataset, typed_relation, write_relation

# Setup logger
logger = get_logger('datasets')


def salary_relation(job, seed):
    """One Salary tuple per distinct post of a Job relation."""
    posts = sorted({t.values[JOB.index_of('post')] for t in job.tuples})
    rng = np.random.default_rng(seed)
    salaries = rng.integers(20_000, 120_000, size=len(posts)).tolist()
    return typed_relation(SALARY, zip(posts, salaries))


def write_workload(name, seed, out_dir):
    """
    Synthesize one workload and write its three relation files.

    Returns:
        list of written paths
    """
    spec = workload_spec(name, seed)
    employee, job = synthesize_dataset(EMPLOYEE, JOB, spec.n1, spec.n2, spec.target, spec.seed)
    salary = salary_relation(job, spec.seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for suffix, relation in (('employee', employee), ('job', job), ('salary', salary)):
        path = out_dir / f"{name}_{suffix}.rel"
        write_relation(path, relation)
        written.append(path)
    logger.info(f"Wrote {name}: {len(employee)} employees, {len(job)} jobs, {len(salary)} salaries")
    return written


def main():
    parser = argparse.ArgumentParser(
        description='Write the workload relations to files',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__
    )
    parser.add_argument('--workload', default='all', choices=[*WORKLOADS, 'all'])
    parser.add_argument('--seed', type=int, default=BENCH_SEED)
    parser.add_argument('--out', default=DATA_DIR)
    parser.add_argument('--skip-join3', action='store_true')
    args = parser.parse_args()

    names = list(WORKLOADS) if args.workload == 'all' else [args.workload]
    if args.skip_join3:
        names = [n for n in names if n != 'join3']

    out_dir = Path(args.out)
    try:
        for name in names:
            for path in write_workload(name, args.seed, out_dir):
                print(f"✅ {path}")
    except (ReflectJoinError, OSError) as e:
        logger.error(f"Dataset generation failed: {e}")
        print(f"❌ Error: {e}")
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
