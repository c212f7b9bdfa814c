"""
Comparison join strategies
==========================
* tailored       - hand-written joins for the two schema pairs of the study
* interpretive   - one generic join over GenericRelation, looking attribute
                   names up on every comparison
* core reflective - metadata-driven join over typed relations using accessor
                   and constructor handles, with an optional plan cache
* brute-force oracle - independent reference used by the tests

The linguistic-reflective strategy lives in src/generator.py and its cached
form in src/join_cache.py.
"""

import threading
from collections import Counter
from dataclasses import dataclass

from src.catalog import EMP_JOB, EMP_JOB_SALARY
from src.errors import InvalidJoin, InterfaceMismatch, IncompatibleDomains, ReflectJoinError
from src.join_cache import JoinCacheKey
from src.logger import get_logger
from src.meta import common_attributes, union_attributes
from src.relations import TupleValue, TypedRelation, make_generic_relation, make_tuple

logger = get_logger('engines')


# =============================================================================
# TAILORED
# =============================================================================
# Shaped like the generated join class, with the types fixed in advance.

def _match_employee_job(tuple1, tuple2):
    return tuple1.values[3] == tuple2.values[2]


def _concatenate_employee_job(tuple1, tuple2):
    v1, v2 = tuple1.values, tuple2.values
    return TupleValue('EmpJob', (v1[0], v1[1], v1[2], v1[3], v2[0], v2[1]))


def tailored_join_employee_job(rel1, rel2):
    """Employee x Job -> EmpJob, natively."""
    result = []
    for t1 in rel1.tuples:
        for t2 in rel2.tuples:
            if _match_employee_job(t1, t2):
                result.append(_concatenate_employee_job(t1, t2))
    return TypedRelation(EMP_JOB, tuple(result))


def _match_empjob_salary(tuple1, tuple2):
    return tuple1.values[4] == tuple2.values[0]


def _concatenate_empjob_salary(tuple1, tuple2):
    return TupleValue('EmpJobSalary', tuple1.values + (tuple2.values[1],))


def tailored_join_empjob_salary(rel1, rel2):
    """EmpJob x Salary -> EmpJobSalary, joined on post."""
    result = []
    for t1 in rel1.tuples:
        for t2 in rel2.tuples:
            if _match_empjob_salary(t1, t2):
                result.append(_concatenate_empjob_salary(t1, t2))
    return TypedRelation(EMP_JOB_SALARY, tuple(result))


TAILORED_JOINS = {
    ('Employee', 'Job'): tailored_join_employee_job,
    ('EmpJob', 'Salary'): tailored_join_empjob_salary,
}


def tailored_join(rel1, rel2):
    """Dispatch to the tailored join for the pair; the pair must be one of TAILORED_JOINS."""
    key = (rel1.schema.class_name, rel2.schema.class_name)
    try:
        join = TAILORED_JOINS[key]
    except KeyError:
        raise InvalidJoin(f"no tailored join for {key[0]} x {key[1]}")
    return join(rel1, rel2)


# =============================================================================
# INTERPRETIVE
# =============================================================================

def interpretive_join(r1, r2):
    """
    Natural join of two GenericRelations.

    Common attributes are found by name and domain; every comparison looks the
    attribute positions up again by name, and the result is formed (and
    validated) through make_generic_relation.

    Raises:
        IncompatibleDomains when a shared name has different domains
    """
    common = []
    for name, domain in zip(r1.attribute_names, r1.attribute_domains):
        other = r2.domain_of(name)
        if other is None:
            continue
        if other is not domain:
            raise IncompatibleDomains(
                f"attribute {name!r} is {domain.value} on the left but {other.value} on the right"
            )
        common.append(name)

    extra = [i for i, name in enumerate(r2.attribute_names) if name not in common]
    names = list(r1.attribute_names) + [r2.attribute_names[i] for i in extra]
    domains = list(r1.attribute_domains) + [r2.attribute_domains[i] for i in extra]

    rows = []
    for row1 in r1.rows:
        for row2 in r2.rows:
            matched = True
            for name in common:
                if row1[r1.index_of(name)] != row2[r2.index_of(name)]:
                    matched = False
                    break
            if matched:
                rows.append(row1 + tuple(row2[i] for i in extra))
    logger.debug(f"Interpretive join on {common or 'no common attributes'}: {len(rows)} rows")
    return make_generic_relation(names, domains, rows)


# =============================================================================
# CORE REFLECTIVE
# =============================================================================

class Accessor:
    """Reflective handle on one attribute of a schema, invoked per tuple."""
    __slots__ = ('schema', 'name', 'position')

    def __init__(self, schema, name):
        self.schema = schema
        self.name = name
        self.position = schema.index_of(name)

    def invoke(self, receiver, *args):
        if args:
            raise InvalidJoin(f"accessor {self.name} takes no arguments")
        if type(receiver) is not TupleValue or receiver.class_name != self.schema.class_name:
            raise InvalidJoin(
                f"{self.schema.class_name}.{self.name} invoked on {type(receiver).__name__}"
            )
        return receiver.values[self.position]


class Constructor:
    """Reflective constructor of a result schema; checks every argument."""
    __slots__ = ('schema',)

    def __init__(self, schema):
        self.schema = schema

    def new_instance(self, args):
        return make_tuple(self.schema, args)


def declared_accessors(schema):
    """name -> Accessor for every attribute (the `getDeclaredMethods` step)."""
    return {a.name: Accessor(schema, a.name) for a in schema.attributes}


@dataclass(frozen=True)
class CorePlan:
    pairs: tuple        # (left accessor, right accessor) per common attribute
    sources: tuple      # (side, accessor) per result attribute, result order
    constructor: Constructor


def reflect_plan(s1, s2, result_schema):
    """
    Inspect both schemas and work out how to match and build result tuples.

    Raises:
        IncompatibleDomains, InterfaceMismatch
    """
    common = common_attributes(s1, s2)
    union = union_attributes(s1, s2)
    if {(a.name, a.domain) for a in union} != {(a.name, a.domain) for a in result_schema.attributes}:
        raise InterfaceMismatch(
            f"{result_schema.declaration()} does not match the union of "
            f"{s1.class_name} and {s2.class_name}"
        )
    left, right = declared_accessors(s1), declared_accessors(s2)
    pairs = tuple((left[a.name], right[a.name]) for a in common)
    sources = tuple(
        (0, left[a.name]) if a.name in left else (1, right[a.name])
        for a in result_schema.attributes
    )
    return CorePlan(pairs, sources, Constructor(result_schema))


def _reflective_match(t1, t2, pairs):
    for getter1, getter2 in pairs:
        if getter1.invoke(t1) != getter2.invoke(t2):
            return False
    return True


def _reflective_concatenate(t1, t2, plan):
    args = [getter.invoke(t2 if side else t1) for side, getter in plan.sources]
    return plan.constructor.new_instance(args)


class CorePlanCache:
    """In-memory plans keyed by JoinCacheKey over (left, right, result) schemas."""

    def __init__(self):
        self._plans = {}
        self._lock = threading.Lock()

    def get(self, s1, s2, result_schema):
        key = JoinCacheKey.of(s1, s2, result_schema)
        plan = self._plans.get(key)
        if plan is None:
            plan = reflect_plan(s1, s2, result_schema)
            with self._lock:
                self._plans[key] = plan
        return plan

    def clear(self):
        with self._lock:
            self._plans.clear()

    def __len__(self):
        return len(self._plans)


def core_reflective_join(rel1, rel2, result_schema, schemas, plan_cache=None):
    """
    Natural join executed directly from metadata, producing tuples of the
    caller-supplied result schema.

    Raises:
        InvalidJoin for non-relation inputs or unknown element classes,
        InterfaceMismatch, IncompatibleDomains
    """
    if not isinstance(rel1, TypedRelation) or not isinstance(rel2, TypedRelation):
        raise InvalidJoin("join failed: Invalid input relations")
    try:
        s1 = schemas.lookup(rel1.schema.class_name)
        s2 = schemas.lookup(rel2.schema.class_name)
        result_schema = schemas.lookup(result_schema.class_name)
    except ReflectJoinError as e:
        raise InvalidJoin(f"join failed: {e.message}", cause=e) from e

    if plan_cache is not None:
        plan = plan_cache.get(s1, s2, result_schema)
    else:
        plan = reflect_plan(s1, s2, result_schema)

    pairs = plan.pairs
    result = []
    for t1 in rel1.tuples:
        for t2 in rel2.tuples:
            if _reflective_match(t1, t2, pairs):
                result.append(_reflective_concatenate(t1, t2, plan))
    logger.debug(f"Core reflective join {s1.class_name} x {s2.class_name} -> "
                 f"{len(result)} {result_schema.class_name} tuples")
    return TypedRelation(result_schema, tuple(result))


# =============================================================================
# ORACLE
# =============================================================================

def brute_force_oracle(r1, r2):
    """
    Reference natural join: every pair, compared through attribute-name maps.

    Returns:
        Counter of result rows, each a sorted tuple of (attribute, value)

    Raises:
        IncompatibleDomains
    """
    s1, s2 = r1.schema, r2.schema
    shared = set(s1.attribute_names) & set(s2.attribute_names)
    for name in shared:
        if s1.attribute(name).domain is not s2.attribute(name).domain:
            raise IncompatibleDomains(f"attribute {name!r} has two domains")
    left = [dict(zip(s1.attribute_names, t.values)) for t in r1.tuples]
    right = [dict(zip(s2.attribute_names, t.values)) for t in r2.tuples]
    out = Counter()
    for m1 in left:
        for m2 in right:
            if all(m1[name] == m2[name] for name in shared):
                merged = dict(m2)
                merged.update(m1)
                out[tuple(sorted(merged.items()))] += 1
    return out


def as_multiset(rows):
    """Counter of rows given as attribute -> value maps (e.g. relation.as_dicts())."""
    return Counter(tuple(sorted(row.items())) for row in rows)
