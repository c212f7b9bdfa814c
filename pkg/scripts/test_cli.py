"""The reflectjoin command line."""

import pytest

import run
from src.config import load_spool_state
from src.errors import NullReferenceError
from src.generator import NatJoin
from src.paths import ProjectPaths
from src.relations import typed_relation, write_relation
from src.catalog import SALARY


@pytest.fixture(autouse=True)
def spool_state(tmp_path, monkeypatch):
    """Keep the persisted spool toggle out of the working tree."""
    path = tmp_path / 'state' / 'spool.json'
    monkeypatch.setattr(ProjectPaths, 'SPOOL_STATE', path)
    return path


@pytest.fixture
def relation_files(tmp_path, employees, jobs):
    left, right = tmp_path / 'employee.rel', tmp_path / 'job.rel'
    write_relation(left, employees)
    write_relation(right, jobs)
    return str(left), str(right)


def join_lines(capsys, files, strategy, *extra):
    left, right = files
    code = run.main(['join', '--left', left, '--right', right, '--strategy', strategy,
                     '--print', *extra])
    assert code == run.EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == f"3 tuples ({strategy})"
    return sorted(lines[:-1])


# =============================================================================
# JOIN
# =============================================================================

def test_every_strategy_prints_the_same_rows(capsys, relation_files, tmp_path):
    expected = join_lines(capsys, relation_files, 'tailored')
    assert expected[0] == ("name=ann, title=engineer, department=r&d, jobId=1, "
                           "post=dev, duties=write code")
    for strategy in ('interpretive', 'coreReflective', 'reflective'):
        assert join_lines(capsys, relation_files, strategy) == expected
    cache = str(tmp_path / 'joins')
    assert join_lines(capsys, relation_files, 'reflectiveCached', '--cache-dir', cache) == expected


def test_join_with_interface(capsys, relation_files):
    plain = join_lines(capsys, relation_files, 'reflective')
    assert join_lines(capsys, relation_files, 'reflective', '--interface', 'EmpJob') == plain


def test_join_without_print(capsys, relation_files):
    left, right = relation_files
    assert run.main(['join', '--left', left, '--right', right, '--strategy', 'tailored']) == 0
    assert capsys.readouterr().out == "3 tuples (tailored)\n"


def test_join_failures(capsys, relation_files, tmp_path):
    left, right = relation_files
    missing = str(tmp_path / 'missing.rel')
    assert run.main(['join', '--left', missing, '--right', right,
                     '--strategy', 'reflective']) == run.EXIT_FAILED
    assert run.main(['join', '--left', left, '--right', right, '--strategy', 'reflective',
                     '--interface', 'Job']) == run.EXIT_FAILED

    salary = tmp_path / 'salary.rel'
    write_relation(salary, typed_relation(SALARY, [('dev', 1)]))
    assert run.main(['join', '--left', left, '--right', str(salary),
                     '--strategy', 'tailored']) == run.EXIT_FAILED
    assert 'invalid_join' in capsys.readouterr().err


def test_print_failure_is_not_a_usage_error(capsys, relation_files, monkeypatch):
    def failing(self, schema):
        raise NullReferenceError("null tuple")

    monkeypatch.setattr(NatJoin, 'printer_for', failing)
    left, right = relation_files
    assert run.main(['join', '--left', left, '--right', right, '--strategy', 'reflective',
                     '--print']) == run.EXIT_FAILED
    assert 'invalid_join' in capsys.readouterr().err


def test_unknown_strategy_is_a_usage_error(relation_files):
    left, right = relation_files
    with pytest.raises(SystemExit) as info:
        run.main(['join', '--left', left, '--right', right, '--strategy', 'fastest'])
    assert info.value.code == run.EXIT_USAGE


# =============================================================================
# BENCH
# =============================================================================

def bench_args(tmp_path, *extra):
    return ['bench', '--workload', 'join1', '--strategies', 'tailored,reflectiveCached',
            '--regime', 'cold', '--iterations', '1', '--cache-dir', str(tmp_path / 'joins'),
            *extra]


def test_bench_csv_to_stdout(capsys, tmp_path):
    assert run.main(bench_args(tmp_path, '--format', 'csv')) == run.EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == 'strategy,workload,phase,regime,mean_ms,stddev_ms,n'
    assert any(line.startswith('tailored,join1,total,cold,') for line in lines)
    assert any(line.startswith('reflectiveCached,join1,compileLoad,cold,') for line in lines)


def test_bench_table_to_file(capsys, tmp_path):
    out = tmp_path / 'report.txt'
    assert run.main(bench_args(tmp_path, '--out', str(out))) == run.EXIT_OK
    assert 'Report written' in capsys.readouterr().out
    assert out.read_text(encoding='utf-8').startswith('join1 (cold) - mean ms (stddev)')


@pytest.mark.parametrize('extra', [
    ['--iterations', '0'],
    ['--warmup', '-1'],
    ['--strategies', 'tailored,quick'],
])
def test_bench_bad_arguments(tmp_path, extra):
    assert run.main(bench_args(tmp_path) + extra) == run.EXIT_USAGE


# =============================================================================
# SPOOL
# =============================================================================

def test_spool_toggle(capsys, tmp_path, spool_state):
    target = tmp_path / 'spool'
    assert run.main(['spool', '--dir', str(target)]) == run.EXIT_OK
    assert load_spool_state() == (True, str(target))

    assert run.main(['spool', '--off']) == run.EXIT_OK
    enabled, directory = load_spool_state()
    assert not enabled and directory == str(target)

    capsys.readouterr()
    run.main(['spool'])
    assert capsys.readouterr().out.startswith('Spooling disabled')


def test_spooling_join_writes_sources(capsys, relation_files, tmp_path):
    target = tmp_path / 'spool'
    run.main(['spool', '--dir', str(target)])
    join_lines(capsys, relation_files, 'reflective')
    assert len(list(target.glob('*.gl'))) >= 3
