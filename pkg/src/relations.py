"""
Relation representations
========================
Two ways to hold a relation:

* TypedRelation - an ordered array of tuples of one schema (one "class" per
  relational type). Values inside tuples are plain host ints/strs whose
  domain is fixed by the schema.
* GenericRelation - the single universal representation used by the
  interpretive strategy. Values are tagged and the whole relation is
  validated when it is formed.

Also: relation files, dataset synthesis and conversions between the two.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.errors import (
    InvalidRelation, ParseError, DomainError, SchemaMismatch, Infeasible,
    ArityError, ReflectJoinError,
)
from src.logger import get_logger
from src.meta import Domain, SchemaDescriptor, value_fits, common_attributes, parse_schema_declaration
from src.utils import is_identifier

logger = get_logger('relations')


@dataclass(frozen=True, slots=True)
class Value:
    """Tagged value: INT (64-bit signed) or TEXT."""
    domain: Domain
    payload: object

    @classmethod
    def of(cls, domain, payload):
        if not value_fits(domain, payload):
            raise DomainError(f"{payload!r} is not a valid {domain.value} value")
        return cls(domain, payload)


@dataclass(frozen=True, slots=True)
class TupleValue:
    """One tuple of a typed relation: its class name and values in schema order."""
    class_name: str
    values: tuple

    def get(self, schema, name):
        return self.values[schema.index_of(name)]


def make_tuple(schema, values):
    """
    Build a tuple of `schema`, checking arity and domains.

    Raises:
        ArityError, DomainError
    """
    values = tuple(values)
    if len(values) != schema.arity:
        raise ArityError(
            f"{schema.class_name} takes {schema.arity} values, got {len(values)}"
        )
    for attr, value in zip(schema.attributes, values):
        if not value_fits(attr.domain, value):
            raise DomainError(
                f"{schema.class_name}.{attr.name} expects {attr.domain.value}, got {value!r}"
            )
    return TupleValue(schema.class_name, values)


@dataclass(frozen=True)
class TypedRelation:
    schema: SchemaDescriptor
    tuples: tuple

    def __len__(self):
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    def as_dicts(self):
        """Rows as attribute-name -> value maps (for multiset comparisons)."""
        names = self.schema.attribute_names
        return [dict(zip(names, t.values)) for t in self.tuples]


def typed_relation(schema, rows):
    """Validated TypedRelation from an iterable of value sequences."""
    return TypedRelation(schema, tuple(make_tuple(schema, row) for row in rows))


@dataclass(frozen=True)
class GenericRelation:
    """
    Universal relation: attribute names, domains and rows of tagged values.
    Validated on construction, so every instance satisfies its invariants.
    """
    attribute_names: tuple
    attribute_domains: tuple
    rows: tuple

    def __post_init__(self):
        names = tuple(self.attribute_names)
        domains = tuple(self.attribute_domains)
        rows = tuple(tuple(row) for row in self.rows)
        object.__setattr__(self, 'attribute_names', names)
        object.__setattr__(self, 'attribute_domains', domains)
        object.__setattr__(self, 'rows', rows)

        for name in names:
            if not is_identifier(name):
                raise InvalidRelation(f"invalid attribute name {name!r}")
        if len(set(names)) != len(names):
            raise InvalidRelation(f"duplicated attribute names: {list(names)}")
        if len(names) != len(domains):
            raise InvalidRelation(
                f"{len(names)} attribute names but {len(domains)} domains"
            )
        for domain in domains:
            if not isinstance(domain, Domain):
                raise InvalidRelation(f"unknown domain {domain!r}")

        width = len(names)
        for i, row in enumerate(rows):
            if len(row) != width:
                raise InvalidRelation(
                    f"row {i} has {len(row)} values, expected {width}"
                )
            for name, domain, value in zip(names, domains, row):
                if not isinstance(value, Value) or value.domain is not domain \
                        or not value_fits(domain, value.payload):
                    raise InvalidRelation(
                        f"row {i}: attribute {name} expects {domain.value}, got {value!r}"
                    )

    def __len__(self):
        return len(self.rows)

    def index_of(self, name):
        """Position of an attribute name, or None."""
        try:
            return self.attribute_names.index(name)
        except ValueError:
            return None

    def domain_of(self, name):
        i = self.index_of(name)
        return None if i is None else self.attribute_domains[i]

    def as_dicts(self):
        return [
            {n: v.payload for n, v in zip(self.attribute_names, row)}
            for row in self.rows
        ]


def make_generic_relation(names, domains, rows):
    """
    The validity gate of the interpretive representation.

    Raises:
        InvalidRelation on duplicate names, arity mismatch or tag mismatch
    """
    return GenericRelation(tuple(names), tuple(domains), tuple(rows))


def to_generic(relation):
    """TypedRelation -> GenericRelation, preserving row order."""
    schema = relation.schema
    domains = tuple(schema.domains)
    rows = [
        tuple(Value(d, v) for d, v in zip(domains, t.values))
        for t in relation.tuples
    ]
    return make_generic_relation(schema.attribute_names, domains, rows)


def from_generic(relation, schema):
    """
    GenericRelation -> TypedRelation of `schema`.

    Raises:
        SchemaMismatch unless names and domains match the schema exactly, in order
    """
    if list(relation.attribute_names) != schema.attribute_names \
            or list(relation.attribute_domains) != schema.domains:
        raise SchemaMismatch(
            f"relation ({', '.join(relation.attribute_names)}) does not match "
            f"{schema.declaration()}"
        )
    name = schema.class_name
    return TypedRelation(
        schema, tuple(TupleValue(name, tuple(v.payload for v in row)) for row in relation.rows)
    )


# =============================================================================
# RELATION FILES
# =============================================================================

def _parse_value(domain, text, line_no):
    if domain is Domain.INT:
        text = text.strip()
        try:
            value = int(text, 10)
        except ValueError:
            raise DomainError(f"{text!r} is not an int", line=line_no)
        if not value_fits(Domain.INT, value):
            raise DomainError(f"{text} is outside the 64-bit range", line=line_no)
        return value
    return text


def _read_rows(lines, schema, first_line_no):
    tuples = []
    name = schema.class_name
    # a lone text attribute holds "" on an empty line
    keep_empty = schema.arity == 1 and schema.attributes[0].domain is Domain.TEXT
    for offset, line in enumerate(lines):
        line_no = first_line_no + offset
        if line == '' and not keep_empty:
            continue
        fields = line.split(',')
        if len(fields) != schema.arity:
            raise ParseError(
                f"expected {schema.arity} values, found {len(fields)}", line=line_no
            )
        values = tuple(
            _parse_value(attr.domain, field, line_no)
            for attr, field in zip(schema.attributes, fields)
        )
        tuples.append(TupleValue(name, values))
    return tuples


def _split_file(path):
    text = Path(path).read_text(encoding='utf-8')
    lines = text.split('\n')
    if lines[-1] == '':
        lines.pop()     # newline ending the last line
    if not lines or not lines[0].strip():
        raise ParseError("missing schema declaration", line=1)
    return lines


def load_relation(path, schema):
    """
    Read a relation file whose header declares `schema`.

    Raises:
        OSError, ParseError (with line number), DomainError, SchemaMismatch
    """
    lines = _split_file(path)
    try:
        declared = parse_schema_declaration(lines[0])
    except ReflectJoinError as e:
        raise ParseError(str(e), line=1)
    if declared.class_name != schema.class_name or not declared.same_structure(schema):
        raise SchemaMismatch(
            f"{path}: header {declared.declaration()} does not match {schema.declaration()}"
        )
    relation = TypedRelation(schema, tuple(_read_rows(lines[1:], schema, 2)))
    logger.info(f"Loaded {len(relation)} {schema.class_name} tuples from {path}")
    return relation


def load_relation_file(path, registry):
    """Read a relation file, registering (or checking) the schema its header declares."""
    lines = _split_file(path)
    try:
        declared = parse_schema_declaration(lines[0])
    except ReflectJoinError as e:
        raise ParseError(str(e), line=1)
    schema = registry.register(declared)
    return load_relation(path, schema)


def write_relation(path, relation):
    """Write a relation in the file format read by load_relation."""
    out = [relation.schema.declaration()]
    for t in relation.tuples:
        fields = []
        for value in t.values:
            text = str(value)
            if ',' in text or '\n' in text:
                raise InvalidRelation(f"value {text!r} cannot be stored in a relation file")
            fields.append(text)
        out.append(','.join(fields))
    Path(path).write_text('\n'.join(out) + '\n', encoding='utf-8')


# =============================================================================
# DATASET SYNTHESIS
# =============================================================================

def solve_multiplicities(n1, n2, target):
    """
    Key multiplicities (m1, m2) with sum(m1*m2) == target, sum(m1) <= n1,
    sum(m2) <= n2.

    Greedy: take the largest product that still leaves a remainder closable by
    one more key with m2 == 1, then close it. At most two key groups are ever
    tried, so a target reachable only through three or more groups is reported
    Infeasible even when such a split exists.

    Raises:
        Infeasible
    """
    if min(n1, n2, target) < 0:
        raise Infeasible(f"negative sizes: n1={n1}, n2={n2}, target={target}")
    if target == 0:
        return []

    best = None
    for m2 in range(1, min(n2, target) + 1):
        m1 = min(n1, target // m2)
        if m1 == 0:
            continue
        rest = target - m1 * m2
        if rest:
            # close with (rest, 1)
            if rest > n1 - m1 or n2 - m2 < 1:
                continue
        product = m1 * m2
        if best is None or product > best[0] or (product == best[0] and m1 + m2 < sum(best[1])):
            best = (product, (m1, m2))

    if best is None:
        raise Infeasible(f"no key multiplicities give {target} pairs from {n1} x {n2} tuples")

    m1, m2 = best[1]
    groups = [(m1, m2)]
    rest = target - m1 * m2
    if rest:
        groups.append((rest, 1))
    return groups


def _key_value(domain, key):
    return key if domain is Domain.INT else f"k{key}"


def _fill_columns(schema, keys, common_names, key_attr, rng):
    """Per-tuple value lists; common attributes derive from the key."""
    n = len(keys)
    columns = []
    for attr in schema.attributes:
        if attr.name == key_attr.name or attr.name in common_names:
            columns.append([_key_value(attr.domain, k) for k in keys])
        elif attr.domain is Domain.INT:
            columns.append(rng.integers(0, 1_000_000, size=n).tolist())
        else:
            columns.append([f"{attr.name}{v}" for v in rng.integers(0, 1_000_000, size=n).tolist()])
    return [tuple(col[i] for col in columns) for i in range(n)]


def synthesize_dataset(s1, s2, n1, n2, target, seed):
    """
    Two relations whose natural join has exactly `target` tuples.

    Deterministic in (schemas, n1, n2, target, seed). The first common attribute
    is the join key; matching keys get the solved multiplicities, the remaining
    tuples get globally unique keys that match nothing.

    Raises:
        Infeasible, IncompatibleDomains
    """
    common = common_attributes(s1, s2)
    if not common:
        if target not in (0, n1 * n2):
            raise Infeasible(
                f"{s1.class_name} and {s2.class_name} share no attributes; "
                f"their join always has {n1 * n2} tuples"
            )
        if target == 0 and n1 and n2:
            raise Infeasible("disjoint schemas cannot produce an empty join of non-empty inputs")
        key_attr = None
    else:
        key_attr = common[0]

    rng = np.random.default_rng(seed)

    if key_attr is None:
        left = [tuple(_random_value(a, rng) for a in s1.attributes) for _ in range(n1)]
        right = [tuple(_random_value(a, rng) for a in s2.attributes) for _ in range(n2)]
        return typed_relation(s1, left), typed_relation(s2, right)

    groups = solve_multiplicities(n1, n2, target)
    left_keys, right_keys = [], []
    for key, (m1, m2) in enumerate(groups, start=1):
        left_keys.extend([key] * m1)
        right_keys.extend([key] * m2)
    # padding keys never match: disjoint ranges per side
    left_keys.extend(1_000_000 + i for i in range(n1 - len(left_keys)))
    right_keys.extend(2_000_000 + i for i in range(n2 - len(right_keys)))

    left_keys = [left_keys[i] for i in rng.permutation(n1).tolist()]
    right_keys = [right_keys[i] for i in rng.permutation(n2).tolist()]

    common_names = {a.name for a in common}
    left = _fill_columns(s1, left_keys, common_names, key_attr, rng)
    right = _fill_columns(s2, right_keys, common_names, key_attr, rng)
    logger.debug(
        f"Synthesized {s1.class_name}({n1}) x {s2.class_name}({n2}) -> {target} "
        f"with groups {groups}"
    )
    return typed_relation(s1, left), typed_relation(s2, right)


def _random_value(attr, rng):
    v = int(rng.integers(0, 1_000_000))
    return v if attr.domain is Domain.INT else f"{attr.name}{v}"
