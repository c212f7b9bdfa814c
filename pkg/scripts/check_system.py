"""
System Check Script
Verifies the interpreter, the installed packages, the writable directories
and one end-to-end reflective join before a benchmark is started.

Usage:
    python scripts/check_system.py [--mode translate|interpret|both]
"""

import argparse
import os
import sys
import tempfile
from importlib import metadata

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.logger import get_logger
from src.paths import ProjectPaths

logger = get_logger('system_check')

MIN_PYTHON = (3, 10)

# (distribution, import name)
PACKAGES = [
    ('numpy', 'numpy'),
    ('python-dotenv', 'dotenv'),
    ('pytest', 'pytest'),
    ('hypothesis', 'hypothesis'),
]


def check_interpreter():
    found = sys.version_info[:3]
    label = '.'.join(map(str, found))
    if found[:2] >= MIN_PYTHON:
        print(f"  ✅ Python {label}")
        return True
    print(f"  ❌ Python {label}, need {MIN_PYTHON[0]}.{MIN_PYTHON[1]} or newer")
    return False


def check_packages():
    missing = []
    for dist, module in PACKAGES:
        try:
            __import__(module)
        except ImportError:
            missing.append(dist)
            print(f"  ❌ {dist} missing")
            continue
        try:
            version = metadata.version(dist)
        except metadata.PackageNotFoundError:
            version = '?'
        print(f"  ✅ {dist} {version}")
    return not missing


def check_writable_dirs():
    from src.config import CACHE_DIR, DATA_DIR

    ok = True
    for label, path in (('join cache', CACHE_DIR), ('data', DATA_DIR),
                        ('logs', ProjectPaths.LOGS), ('reports', ProjectPaths.REPORTS)):
        try:
            os.makedirs(path, exist_ok=True)
            with tempfile.TemporaryFile(dir=path):
                pass
            print(f"  ✅ {label}: {path}")
        except OSError as e:
            print(f"  ❌ {label}: {path} not writable ({e})")
            ok = False
    return ok


def check_reflective_join(modes):
    from src.catalog import EMPLOYEE, JOB
    from src.engines import as_multiset, brute_force_oracle
    from src.generator import NatJoin
    from src.genlang import ClassRegistry, compile_count, reset_compile_counter
    from src.meta import SchemaRegistry
    from src.relations import synthesize_dataset

    employees, jobs = synthesize_dataset(EMPLOYEE, JOB, 20, 5, 12, seed=7)
    expected = brute_force_oracle(employees, jobs)
    ok = True
    for mode in modes:
        schemas = SchemaRegistry()
        natjoin = NatJoin(schemas, ClassRegistry(schemas, mode), spool=False)
        reset_compile_counter()
        result = natjoin.nat_join(employees, jobs)
        same = as_multiset(result.as_dicts()) == expected
        icon = '✅' if same else '❌'
        print(f"  {icon} {mode}: {len(result)} tuples, {compile_count()} classes compiled"
              f"{'' if same else ', differs from the oracle'}")
        ok = ok and same
    return ok


def main():
    parser = argparse.ArgumentParser(
        description='Check the environment before benchmarking',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__
    )
    parser.add_argument('--mode', default='both', choices=['translate', 'interpret', 'both'])
    args = parser.parse_args()
    modes = ('translate', 'interpret') if args.mode == 'both' else (args.mode,)

    print("=" * 60)
    print("REFLECTJOIN - SYSTEM CHECK")
    print("=" * 60)

    checks = [
        ("Interpreter", check_interpreter),
        ("Packages", check_packages),
        ("Writable directories", check_writable_dirs),
        ("Reflective join", lambda: check_reflective_join(modes)),
    ]

    failed = []
    for name, check in checks:
        print(f"\n{name}:")
        try:
            passed = check()
        except Exception as e:
            logger.error(f"{name} check crashed: {e}", exc_info=True)
            print(f"  ❌ crashed: {e}")
            passed = False
        if not passed:
            failed.append(name)

    print("\n" + "=" * 60)
    if failed:
        print(f"❌ {len(failed)} of {len(checks)} checks failed: {', '.join(failed)}")
        print("   pip install -r requirements.txt, then see logs/system_check.log")
        return 1
    print(f"🎉 All {len(checks)} checks passed. Next: python run.py bench --workload join1")
    return 0


if __name__ == '__main__':
    sys.exit(main())
