"""Source generation and the reflective natJoin pipeline."""

import gc
import random
import re

import pytest

from src.catalog import EMP_JOB, EMPLOYEE, JOB, SALARY, register_study_schemas
from src.engines import as_multiset, brute_force_oracle
from src.errors import (
    ArrayBoundsError, BuilderUnderflow, ClassCastError, CompilationError, IncompatibleDomains,
    InvalidArgument, InvalidJoin, NoSuchMethod, NullReferenceError, StackOverflowError,
)
from src.generator import (
    NatJoin, PhaseTimer, ProgramBuilder, cast_relation, generate_join,
    generate_print_relation, generate_res_class, generated_line_count, unique_id,
)
from src.genlang import ClassRegistry, compile_classes, to_relation
from src.genlang.vm import VM_MODES
from src.meta import SchemaRegistry, common_attributes, parse_schema_declaration, union_attributes
from src.relations import make_tuple, typed_relation


@pytest.fixture
def salaries():
    return typed_relation(SALARY, [('dev', 100), ('lead', 200)])


def join_source(s1, s2):
    return generate_join('J', 'R', s1, s2, common_attributes(s1, s2), union_attributes(s1, s2))


# =============================================================================
# PROGRAM BUILDER
# =============================================================================

def test_builder_indents_at_line_start():
    p = ProgramBuilder()
    p.add_line("a {")
    with p.indented():
        p.add_text("b").add_text("c").add_line(";")
        p.add_line()
    p.add_line("}")
    assert p.get_text() == "a {\n    bc;\n\n}\n"


def test_builder_underflow():
    p = ProgramBuilder().indent()
    p.outdent()
    with pytest.raises(BuilderUnderflow):
        p.outdent()


def test_unique_ids_are_fresh():
    first, second = unique_id(), unique_id()
    assert first != second
    assert first.startswith('Temp')
    skipped = []
    name = unique_id(lambda n: not skipped and not skipped.append(n))
    assert skipped and name != skipped[0]


# =============================================================================
# GENERATED SOURCE
# =============================================================================

def test_join_source_shape():
    text = join_source(EMPLOYEE, JOB)
    assert text.startswith("// This is a generated class to join Employees and Jobs.\n")
    assert "static any join(any arg1, any arg2) {" in text
    assert "Employee[] rel1 = (Employee[]) arg1;" in text
    assert "return tuple1.jobId() == tuple2.jobId();" in text
    assert ("return new R(tuple1.name(), tuple1.title(), tuple1.department(), "
            "tuple1.jobId(), tuple2.post(), tuple2.duties());") in text


def test_match_on_several_attributes():
    a = parse_schema_declaration("A(k:int, t:text, x:int)")
    b = parse_schema_declaration("B(t:text, k:int, y:text)")
    assert "return tuple1.k() == tuple2.k() && tuple1.t() == tuple2.t();" in join_source(a, b)


def test_disjoint_schemas_match_everything():
    a = parse_schema_declaration("A(x:int)")
    b = parse_schema_declaration("B(y:text)")
    assert "        return true;\n" in join_source(a, b)


def test_result_class_source():
    text = generate_res_class('R', EMP_JOB, union_attributes(EMPLOYEE, JOB))
    assert "class R implements EmpJob {" in text
    assert "    text duties();\n" in text
    assert "    int jobId();\n" in text


def test_print_source():
    text = generate_print_relation('P', SALARY)
    assert 'emit("post=" + tuple.post() + ", salary=" + tuple.salary());' in text


def test_generated_code_is_short():
    sources = [join_source(EMPLOYEE, JOB),
               generate_res_class('R', None, union_attributes(EMPLOYEE, JOB))]
    assert 30 < generated_line_count(sources) < 80


# =============================================================================
# NATURAL JOIN
# =============================================================================

def test_nat_join_matches_oracle(natjoin, employees, jobs):
    result = natjoin.nat_join(employees, jobs)
    assert len(result) == 3
    assert result.schema.attribute_names == EMP_JOB.attribute_names
    assert as_multiset(result.as_dicts()) == brute_force_oracle(employees, jobs)


def test_nat_join_records_phases(natjoin, employees, jobs):
    timer = PhaseTimer()
    natjoin.nat_join(employees, jobs, timer)
    assert set(timer.phases) == {'generate', 'compileLoad', 'join'}
    assert all(ms >= 0.0 for ms in timer.phases.values())


def test_each_call_generates_new_classes(natjoin, employees, jobs):
    first = natjoin.nat_join(employees, jobs)
    second = natjoin.nat_join(employees, jobs)
    assert first.schema.class_name != second.schema.class_name
    assert as_multiset(first.as_dicts()) == as_multiset(second.as_dicts())


def test_join_with_interface(natjoin, employees, jobs):
    result = natjoin.nat_join_with_interface(employees, jobs, 'EmpJob')
    assert result.schema.implements('EmpJob')
    rows = cast_relation(result, EMP_JOB).rows()
    assert {(r['name'], r['post']) for r in rows} == {('ann', 'dev'), ('bob', 'lead'), ('cid', 'dev')}


def test_result_follows_interface_order(natjoin, employees, jobs):
    reordered = parse_schema_declaration(
        "JobFirst(post:text, duties:text, jobId:int, name:text, title:text, department:text)")
    result = natjoin.nat_join_with_interface(employees, jobs, reordered)
    assert result.schema.attribute_names == reordered.attribute_names
    assert result.schema.extends(reordered)
    assert as_multiset(result.as_dicts()) == brute_force_oracle(employees, jobs)
    rows = cast_relation(result, reordered).rows()
    assert {(r['name'], r['jobId']) for r in rows} == {('ann', 1), ('bob', 2), ('cid', 1)}


def test_cast_to_unrelated_interface(natjoin, employees, jobs):
    result = natjoin.nat_join(employees, jobs)
    with pytest.raises(ClassCastError):
        cast_relation(result, EMP_JOB)
    with pytest.raises(ClassCastError):
        cast_relation([1, 2], EMP_JOB)


def test_join_result_joins_again(natjoin, employees, jobs, salaries):
    result = natjoin.nat_join_with_interface(employees, jobs, EMP_JOB)
    wider = natjoin.nat_join(result, salaries)
    assert len(wider) == 3
    assert wider.schema.attribute_names[-1] == 'salary'
    assert as_multiset(wider.as_dicts()) == brute_force_oracle(result, salaries)


def test_empty_inputs(natjoin, jobs):
    empty = typed_relation(EMPLOYEE, [])
    assert len(natjoin.nat_join(empty, jobs)) == 0
    assert len(natjoin.nat_join(jobs, typed_relation(EMPLOYEE, []))) == 0


def test_cross_product(natjoin):
    a = typed_relation(parse_schema_declaration("A(x:int)"), [(1,), (2,)])
    b = typed_relation(parse_schema_declaration("B(y:text)"), [('p',), ('q',), ('r',)])
    result = natjoin.nat_join(a, b)
    assert sorted(t.values for t in result) == sorted((x, y) for x in (1, 2) for y in 'pqr')


def test_file_backend(schemas, classes, employees, jobs):
    natjoin = NatJoin(schemas, classes, spool=False, backend='file')
    assert as_multiset(natjoin.nat_join(employees, jobs).as_dicts()) == \
        brute_force_oracle(employees, jobs)


def test_spooling_writes_sources(schemas, classes, employees, jobs, tmp_path):
    natjoin = NatJoin(schemas, classes, spool=tmp_path)
    result = natjoin.nat_join(employees, jobs)
    spooled = {p.name for p in tmp_path.glob('*.gl')}
    assert f"{result.schema.class_name}.gl" in spooled
    assert len(spooled) == 2


def test_uncached_join_releases_its_classes(natjoin, employees, jobs):
    loaded_before = set(natjoin.classes.names())
    schemas_before = set(natjoin.schemas.names())
    result = natjoin.nat_join(employees, jobs)
    natjoin.print_relation(result)
    name = result.schema.class_name
    # the join class is gone, the result class and its printer stay
    assert name in natjoin.classes
    assert len(natjoin.classes) == len(loaded_before) + 2

    del result
    gc.collect()
    natjoin.evict_released()
    assert set(natjoin.classes.names()) == loaded_before
    assert set(natjoin.schemas.names()) == schemas_before


def test_failed_join_unloads_its_classes(natjoin, employees, jobs, monkeypatch):
    loaded_before = set(natjoin.classes.names())
    schemas_before = set(natjoin.schemas.names())

    def failing(*args):
        raise NullReferenceError("null slot")

    monkeypatch.setattr(natjoin, 'run_join', failing)
    with pytest.raises(InvalidJoin) as info:
        natjoin.nat_join(employees, jobs)
    assert info.value.cause_kind == 'null_reference'
    assert set(natjoin.classes.names()) == loaded_before
    assert set(natjoin.schemas.names()) == schemas_before


# =============================================================================
# FAILURES
# =============================================================================

def test_invalid_inputs(natjoin, jobs):
    with pytest.raises(InvalidJoin, match='Invalid input relations'):
        natjoin.nat_join(jobs, [('a', 'b', 1)])


def test_incompatible_domains(natjoin):
    r = typed_relation(parse_schema_declaration("R(k:int)"), [(1,)])
    s = typed_relation(parse_schema_declaration("S(k:text)"), [('1',)])
    with pytest.raises(IncompatibleDomains):
        natjoin.nat_join(r, s)


def test_interface_mismatch_keeps_its_kind(natjoin, employees, jobs):
    with pytest.raises(InvalidJoin) as info:
        natjoin.nat_join_with_interface(employees, jobs, 'Job')
    assert info.value.cause_kind == 'interface_mismatch'


def test_unknown_interface(natjoin, employees, jobs):
    with pytest.raises(InvalidJoin) as info:
        natjoin.nat_join_with_interface(employees, jobs, 'Nope')
    assert info.value.cause_kind == 'schema_not_found'


# =============================================================================
# PRINTING
# =============================================================================

def test_print_relation(natjoin, jobs):
    assert natjoin.print_relation(jobs) == (
        "post=dev, duties=write code, jobId=1\n"
        "post=lead, duties=run sales, jobId=2\n"
        "post=ops, duties=keep it up, jobId=3\n"
    )


def test_printer_is_reused(natjoin, jobs):
    assert natjoin.printer_for(JOB) is natjoin.printer_for(JOB)


def test_print_join_result(natjoin, employees, jobs):
    text = natjoin.print_relation(natjoin.nat_join(employees, jobs))
    assert text.splitlines()[0].startswith("name=")
    assert len(text.splitlines()) == 3


def test_print_rejects_non_relations(natjoin):
    with pytest.raises(InvalidArgument):
        natjoin.print_relation("not a relation")


def test_print_failure_keeps_its_kind(natjoin, jobs, monkeypatch):
    def failing(*args, **kwargs):
        raise NullReferenceError("null tuple")

    monkeypatch.setattr(natjoin.classes, 'invoke_static', failing)
    with pytest.raises(InvalidJoin) as info:
        natjoin.print_relation(jobs)
    assert not isinstance(info.value, InvalidArgument)
    assert info.value.cause_kind == 'null_reference'


# =============================================================================
# MUTATED SOURCES
# =============================================================================

TOKEN_RE = re.compile(r'==|&&|\+\+|\w+|[^\w\s]')
REPLACEMENTS = ['int', 'text', 'any', 'rel1', 'rel2', 'tuple1', 'size2', 'i', 'j', '(', ')',
                '{', '}', '[', ']', ';', ',', '.', '=', '==', '&&', '+', '<', '0', '1',
                'true', 'new', 'return', 'R', 'Job']


def mutants(source, count, seed):
    rng = random.Random(seed)
    spans = [m.span() for m in TOKEN_RE.finditer(source)]
    for _ in range(count):
        start, end = rng.choice(spans)
        replacement = '' if rng.random() < 0.5 else rng.choice(REPLACEMENTS)
        yield source[:start] + replacement + source[end:]


RUNTIME_FAILURES = (ArrayBoundsError, ClassCastError, NullReferenceError, StackOverflowError,
                    NoSuchMethod)


def run_mutant(mode, sources, employees, jobs):
    """('rejected', phase), ('raised', error class) or ('ran', result multiset)."""
    classes = ClassRegistry(register_study_schemas(SchemaRegistry()), mode)
    try:
        compile_classes(['J', 'R'], sources, classes)
    except CompilationError as e:
        # a rejected batch leaves nothing behind
        assert 'J' not in classes and 'R' not in classes
        return 'rejected', e.phase
    try:
        result = to_relation(classes.invoke_static('J', 'join', [employees, jobs]), classes.schemas)
    except RUNTIME_FAILURES as e:
        return 'raised', type(e)
    for t in result:
        make_tuple(result.schema, t.values)
    return 'ran', as_multiset(result.as_dicts())


def test_mutated_join_sources_fail_safely(employees, jobs):
    original = join_source(EMPLOYEE, JOB)
    result_source = generate_res_class('R', None, union_attributes(EMPLOYEE, JOB))
    expected = brute_force_oracle(employees, jobs)
    seen = {'rejected': 0, 'raised': 0, 'ran': 0}
    for source in mutants(original, 100, seed=11):
        outcomes = [run_mutant(mode, [source, result_source], employees, jobs) for mode in VM_MODES]
        # both tiers reach the same verdict
        assert outcomes[0] == outcomes[1]
        kind, detail = outcomes[0]
        seen[kind] += 1
        if kind == 'rejected':
            assert detail in ('syntax', 'type', 'link')
        if TOKEN_RE.findall(source) == TOKEN_RE.findall(original):
            assert outcomes[0] == ('ran', expected)
    assert sum(seen.values()) == 100
    assert seen['rejected'] > 0
