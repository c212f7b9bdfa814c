"""The comparison strategies against each other and against the oracle."""

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from src.catalog import EMP_JOB, EMP_JOB_SALARY, EMPLOYEE, JOB, SALARY
from src.engines import (
    Accessor, Constructor, CorePlanCache, as_multiset, brute_force_oracle,
    core_reflective_join, declared_accessors, interpretive_join, reflect_plan, tailored_join,
)
from src.errors import ArityError, IncompatibleDomains, InterfaceMismatch, InvalidJoin
from src.generator import NatJoin
from src.genlang import ClassRegistry
from src.genlang.vm import VM_MODES
from src.join_cache import JoinCache, cached_reflective_join
from src.meta import (
    AttributeDescriptor, Domain, SchemaDescriptor, SchemaRegistry, parse_schema_declaration,
    union_attributes,
)
from src.relations import make_tuple, synthesize_dataset, to_generic, typed_relation

NAMES = ('a', 'b', 'c', 'd', 'e')
# keywords are legal attribute names
WIDE_NAMES = NAMES + ('jobId', 'post', 'rank', 'zone', 'k1', 'valueOf', 'text', 'seq')
CLASS_NAMES = ('Left', 'Right', 'Emp', 'Dept', 'Order', 'Line', 'T1', 'T2')
VALUES = {Domain.INT: st.integers(0, 2), Domain.TEXT: st.sampled_from(['x', 'y'])}


@st.composite
def relation_pairs(draw, names=NAMES, class_names=('Left', 'Right'), max_arity=4):
    """
    Two small relations over overlapping attribute sets with agreeing domains.
    Attribute order is drawn independently per side, so shared attributes can
    sit anywhere in either schema.
    """
    domains = {n: draw(st.sampled_from([Domain.INT, Domain.TEXT])) for n in names}
    left_name, right_name = draw(st.permutations(class_names))[:2]

    def relation(class_name):
        picked = draw(st.lists(st.sampled_from(names), min_size=1, max_size=max_arity, unique=True))
        schema = SchemaDescriptor(class_name, tuple(AttributeDescriptor(n, domains[n]) for n in picked))
        rows = draw(st.lists(st.tuples(*[VALUES[domains[n]] for n in picked]), max_size=6))
        return typed_relation(schema, rows)

    return relation(left_name), relation(right_name)


def result_schema_for(schemas, rel1, rel2):
    union = union_attributes(rel1.schema, rel2.schema)
    return schemas.register(SchemaDescriptor('LeftRightRow', tuple(union)))


# =============================================================================
# EQUIVALENCE
# =============================================================================

@pytest.mark.parametrize('mode', VM_MODES)
@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(pair=relation_pairs())
def test_all_strategies_agree(mode, pair):
    rel1, rel2 = pair
    assert_strategies_agree(mode, rel1, rel2)


@pytest.mark.slow
@pytest.mark.parametrize('mode', VM_MODES)
@settings(max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(pair=relation_pairs(WIDE_NAMES, CLASS_NAMES, max_arity=6))
def test_all_strategies_agree_on_wide_schemas(mode, pair):
    rel1, rel2 = pair
    assert_strategies_agree(mode, rel1, rel2)


def assert_strategies_agree(mode, rel1, rel2):
    expected = brute_force_oracle(rel1, rel2)

    schemas = SchemaRegistry()
    schemas.register(rel1.schema)
    schemas.register(rel2.schema)
    natjoin = NatJoin(schemas, ClassRegistry(schemas, mode), spool=False)

    interpretive = interpretive_join(to_generic(rel1), to_generic(rel2))
    core = core_reflective_join(rel1, rel2, result_schema_for(schemas, rel1, rel2), schemas)
    reflective = natjoin.nat_join(rel1, rel2)
    cached = cached_reflective_join(JoinCache(None, natjoin), rel1, rel2)

    assert as_multiset(interpretive.as_dicts()) == expected
    assert as_multiset(core.as_dicts()) == expected
    assert as_multiset(reflective.as_dicts()) == expected
    assert as_multiset(cached.as_dicts()) == expected


@pytest.mark.parametrize('n1, n2, target', [(100, 15, 153), (60, 20, 90)])
def test_study_pair_on_synthesized_data(natjoin, schemas, n1, n2, target):
    employee, job = synthesize_dataset(EMPLOYEE, JOB, n1, n2, target, seed=21)
    expected = brute_force_oracle(employee, job)
    assert sum(expected.values()) == target

    assert as_multiset(tailored_join(employee, job).as_dicts()) == expected
    assert as_multiset(interpretive_join(to_generic(employee), to_generic(job)).as_dicts()) == expected
    assert as_multiset(core_reflective_join(employee, job, EMP_JOB, schemas).as_dicts()) == expected
    assert as_multiset(natjoin.nat_join_with_interface(employee, job, EMP_JOB).as_dicts()) == expected


# =============================================================================
# TAILORED
# =============================================================================

def test_tailored_employee_job(employees, jobs):
    result = tailored_join(employees, jobs)
    assert result.schema is EMP_JOB
    assert as_multiset(result.as_dicts()) == brute_force_oracle(employees, jobs)


def test_tailored_empjob_salary(employees, jobs):
    salaries = typed_relation(SALARY, [('dev', 100), ('ops', 300)])
    empjob = tailored_join(employees, jobs)
    result = tailored_join(empjob, salaries)
    assert result.schema is EMP_JOB_SALARY
    assert sorted(t.values[0] for t in result) == ['ann', 'cid']
    assert as_multiset(result.as_dicts()) == brute_force_oracle(empjob, salaries)


def test_tailored_only_knows_its_pairs(jobs, employees):
    with pytest.raises(InvalidJoin):
        tailored_join(jobs, employees)


# =============================================================================
# INTERPRETIVE
# =============================================================================

def test_interpretive_result_is_generic(employees, jobs):
    result = interpretive_join(to_generic(employees), to_generic(jobs))
    assert result.attribute_names == tuple(EMP_JOB.attribute_names)
    assert result.domain_of('duties') is Domain.TEXT


def test_interpretive_incompatible_domains():
    r = typed_relation(parse_schema_declaration("R(k:int)"), [(1,)])
    s = typed_relation(parse_schema_declaration("S(k:text)"), [('1',)])
    with pytest.raises(IncompatibleDomains):
        interpretive_join(to_generic(r), to_generic(s))
    with pytest.raises(IncompatibleDomains):
        brute_force_oracle(r, s)


def test_interpretive_cross_product():
    r = typed_relation(parse_schema_declaration("R(a:int)"), [(1,), (2,)])
    s = typed_relation(parse_schema_declaration("S(b:text)"), [('p',), ('q',)])
    assert len(interpretive_join(to_generic(r), to_generic(s))) == 4


# =============================================================================
# CORE REFLECTIVE
# =============================================================================

def test_accessor_checks_receiver(employees, jobs):
    accessor = Accessor(JOB, 'post')
    assert accessor.invoke(jobs.tuples[0]) == 'dev'
    with pytest.raises(InvalidJoin):
        accessor.invoke(employees.tuples[0])
    with pytest.raises(InvalidJoin):
        accessor.invoke(jobs.tuples[0], 1)


def test_declared_accessors_cover_schema():
    assert list(declared_accessors(SALARY)) == ['post', 'salary']


def test_constructor_checks_arguments():
    constructor = Constructor(SALARY)
    assert constructor.new_instance(['dev', 1]) == make_tuple(SALARY, ('dev', 1))
    with pytest.raises(ArityError):
        constructor.new_instance(['dev'])


def test_plan_requires_matching_result_schema():
    with pytest.raises(InterfaceMismatch):
        reflect_plan(EMPLOYEE, JOB, JOB)
    plan = reflect_plan(EMPLOYEE, JOB, EMP_JOB)
    assert [(a.name, b.name) for a, b in plan.pairs] == [('jobId', 'jobId')]
    assert [side for side, _ in plan.sources] == [0, 0, 0, 0, 1, 1]


def test_plan_cache(schemas, employees, jobs):
    cache = CorePlanCache()
    first = cache.get(EMPLOYEE, JOB, EMP_JOB)
    assert cache.get(EMPLOYEE, JOB, EMP_JOB) is first
    assert len(cache) == 1
    result = core_reflective_join(employees, jobs, EMP_JOB, schemas, cache)
    assert len(result) == 3 and len(cache) == 1
    cache.clear()
    assert len(cache) == 0


def test_core_reflective_failures(schemas, employees, jobs):
    with pytest.raises(InvalidJoin, match='Invalid input relations'):
        core_reflective_join(employees, list(jobs), EMP_JOB, schemas)
    with pytest.raises(InvalidJoin) as info:
        core_reflective_join(employees, jobs, EMP_JOB, SchemaRegistry())
    assert info.value.cause_kind == 'schema_not_found'
    with pytest.raises(InterfaceMismatch):
        core_reflective_join(employees, jobs, SALARY, schemas)
