"""
Linguistic-reflective natural join
==================================
Given two typed relations, inspect their schemas, write a GenLang join class
specialised to them plus a class for the result tuples, compile and load
both, then call the generated `join`. The same pipeline prints relations.
"""

import collections
import itertools
import tempfile
import threading
import time
import weakref
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from src.config import load_spool_state
from src.errors import (
    BuilderUnderflow, InterfaceMismatch, InvalidJoin, InvalidArgument,
    ReflectJoinError, ClassCastError, DuplicateSchema, InvalidSchema,
)
from src.genlang import (
    ClassRegistry, compile_to_bytes, load_batch, read_unit, write_unit, to_relation,
)
from src.logger import get_logger
from src.meta import SchemaDescriptor, SchemaRegistry, common_attributes, union_attributes
from src.paths import safe_join
from src.relations import TypedRelation

logger = get_logger('generator')

INDENT = '    '


class ProgramBuilder:
    """Accumulates source text; indentation is applied at the start of each line."""

    def __init__(self):
        self._parts = []
        self._depth = 0
        self._at_line_start = True

    @property
    def depth(self):
        return self._depth

    def _prefix(self):
        if self._at_line_start:
            self._parts.append(INDENT * self._depth)
            self._at_line_start = False

    def add_text(self, fragment):
        if fragment:
            self._prefix()
            self._parts.append(fragment)
        return self

    def add_line(self, fragment=''):
        if fragment:
            self._prefix()
            self._parts.append(fragment)
        self._parts.append('\n')
        self._at_line_start = True
        return self

    def indent(self):
        self._depth += 1
        return self

    def outdent(self):
        if self._depth == 0:
            raise BuilderUnderflow("outdent below column 0")
        self._depth -= 1
        return self

    @contextmanager
    def indented(self):
        self.indent()
        try:
            yield self
        finally:
            self.outdent()

    def get_text(self):
        return ''.join(self._parts)


_id_counter = itertools.count(1)
_id_lock = threading.Lock()


def unique_id(taken=None):
    """
    Fresh class name `Temp<n>`; n grows monotonically across the process.

    Args:
        taken: optional predicate; names it accepts are skipped
    """
    while True:
        with _id_lock:
            name = f"Temp{next(_id_counter)}"
        if taken is None or not taken(name):
            return name


# =============================================================================
# GENERATORS
# =============================================================================

def _accessor_call(var, attr):
    return f"{var}.{attr.name}()"


def generate_join(join_class, result_class, s1, s2, common, union):
    """
    GenLang source of a join class specialised to (s1, s2).

    The class has three static methods: `join(any, any)` running the nested
    loop, `match` comparing the common attributes and `concatenate` building
    one result tuple in union order.
    """
    t1, t2 = s1.class_name, s2.class_name
    left_names = {a.name for a in s1.attributes}
    p = ProgramBuilder()
    p.add_line(f"// This is a generated class to join {t1}s and {t2}s.")
    p.add_line(f"class {join_class} {{")
    with p.indented():
        p.add_line("static any join(any arg1, any arg2) {")
        with p.indented():
            p.add_line(f"{t1}[] rel1 = ({t1}[]) arg1;")
            p.add_line(f"{t2}[] rel2 = ({t2}[]) arg2;")
            p.add_line(f"seq<{result_class}> resultVector = new seq<{result_class}>();")
            p.add_line("int size1 = rel1.length;")
            p.add_line("int size2 = rel2.length;")
            p.add_line("for (int i = 0; i < size1; i++) {")
            with p.indented():
                p.add_line("for (int j = 0; j < size2; j++) {")
                with p.indented():
                    p.add_line("if (match(rel1[i], rel2[j])) {")
                    with p.indented():
                        p.add_line("resultVector.add(concatenate(rel1[i], rel2[j]));")
                    p.add_line("}")
                p.add_line("}")
            p.add_line("}")
            p.add_line("int resSize = resultVector.size();")
            p.add_line(f"{result_class}[] resultArray = new {result_class}[resSize];")
            p.add_line("for (int k = 0; k < resSize; k++) {")
            with p.indented():
                p.add_line("resultArray[k] = resultVector.get(k);")
            p.add_line("}")
            p.add_line("return resultArray;")
        p.add_line("}")
        p.add_line()

        p.add_line(f"static boolean match({t1} tuple1, {t2} tuple2) {{")
        with p.indented():
            if common:
                p.add_text("return ")
                for n, attr in enumerate(common):
                    if n:
                        p.add_text(" && ")
                    p.add_text(f"{_accessor_call('tuple1', attr)} == {_accessor_call('tuple2', attr)}")
                p.add_line(";")
            else:
                # No common attributes: cross product
                p.add_line("return true;")
        p.add_line("}")
        p.add_line()

        p.add_line(f"static {result_class} concatenate({t1} tuple1, {t2} tuple2) {{")
        with p.indented():
            args = [
                _accessor_call('tuple1' if attr.name in left_names else 'tuple2', attr)
                for attr in union
            ]
            p.add_line(f"return new {result_class}({', '.join(args)});")
        p.add_line("}")
    p.add_line("}")
    return p.get_text()


def check_interface(interface, attributes):
    """
    Raises:
        InterfaceMismatch unless the interface has exactly these attributes
    """
    wanted = {(a.name, a.domain) for a in interface.attributes}
    given = {(a.name, a.domain) for a in attributes}
    if wanted != given:
        missing = sorted(n for n, _ in wanted - given)
        extra = sorted(n for n, _ in given - wanted)
        raise InterfaceMismatch(
            f"{interface.class_name} does not describe the join result "
            f"(missing {missing or 'nothing'}, unexpected {extra or 'nothing'})"
        )


def generate_res_class(class_name, result_interface, attributes):
    """GenLang source of the result tuple class: one accessor per attribute."""
    if not attributes:
        raise InvalidArgument("a result class needs at least one attribute")
    if result_interface is not None:
        check_interface(result_interface, attributes)
    p = ProgramBuilder()
    p.add_line("// This is a generated class for the tuples of a join result.")
    header = f"class {class_name}"
    if result_interface is not None:
        header += f" implements {result_interface.class_name}"
    p.add_line(header + " {")
    with p.indented():
        for attr in attributes:
            p.add_line(f"{attr.domain.value} {attr.name}();")
    p.add_line("}")
    return p.get_text()


def generate_print_relation(class_name, schema):
    """GenLang source of a printer emitting one `attr=value, ...` line per tuple."""
    t = schema.class_name
    p = ProgramBuilder()
    p.add_line(f"// This is a generated class to print {t} relations.")
    p.add_line(f"class {class_name} {{")
    with p.indented():
        p.add_line("static void print(any arg) {")
        with p.indented():
            p.add_line(f"{t}[] rel = ({t}[]) arg;")
            p.add_line("int size = rel.length;")
            p.add_line("for (int i = 0; i < size; i++) {")
            with p.indented():
                p.add_line(f"{t} tuple = rel[i];")
                if schema.attributes:
                    pieces = []
                    for n, attr in enumerate(schema.attributes):
                        label = f"{', ' if n else ''}{attr.name}="
                        pieces.append(f'"{label}"')
                        pieces.append(f"tuple.{attr.name}()")
                    p.add_line(f"emit({' + '.join(pieces)});")
                else:
                    p.add_line('emit("");')
            p.add_line("}")
        p.add_line("}")
    p.add_line("}")
    return p.get_text()


def generated_line_count(sources):
    """Non-blank source lines across a set of generated units."""
    return sum(1 for text in sources for line in text.splitlines() if line.strip())


def spool_source(directory, class_name, text):
    """Write a generated unit to `<directory>/<class_name>.gl`; failures are logged."""
    try:
        target = safe_join(directory, f"{class_name}.gl")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding='utf-8')
    except (OSError, ValueError) as e:
        logger.warning(f"Could not spool {class_name}: {e}")


# =============================================================================
# INTERFACE VIEW
# =============================================================================

@dataclass(frozen=True)
class InterfaceView:
    """Read-only view of a relation through an interface schema."""
    interface: SchemaDescriptor
    relation: TypedRelation

    def __len__(self):
        return len(self.relation)

    def __iter__(self):
        schema = self.relation.schema
        positions = [schema.index_of(a.name) for a in self.interface.attributes]
        names = self.interface.attribute_names
        for t in self.relation.tuples:
            yield {name: t.values[i] for name, i in zip(names, positions)}

    def rows(self):
        return list(self)


def cast_relation(relation, interface):
    """
    View `relation` through `interface` (a schema).

    Raises:
        ClassCastError when the tuples' class does not implement it
    """
    if not isinstance(relation, TypedRelation):
        raise ClassCastError(f"{type(relation).__name__} is not a relation")
    if not relation.schema.implements(interface.class_name):
        raise ClassCastError(
            f"{relation.schema.class_name}[] cannot be cast to {interface.class_name}[]"
        )
    return InterfaceView(interface, relation)


# =============================================================================
# ORCHESTRATION
# =============================================================================

@dataclass(frozen=True)
class JoinPlan:
    left: SchemaDescriptor
    right: SchemaDescriptor
    common: tuple
    union: tuple
    interface: Optional[SchemaDescriptor]


class PhaseTimer:
    """Collects per-phase wall times in milliseconds."""

    def __init__(self):
        self.phases = {}

    @contextmanager
    def phase(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.phases[name] = self.phases.get(name, 0.0) + (time.perf_counter() - start) * 1000.0


@contextmanager
def maybe_phase(timer, name):
    if timer is None:
        yield
    else:
        with timer.phase(name):
            yield


_UNSET = object()


class NatJoin:
    """
    The reflective join engine.

    Args:
        schemas: SchemaRegistry shared with the caller
        classes: ClassRegistry loading generated classes (built on `schemas`)
        spool: directory for generated sources, False to disable, or unset
            to follow the persisted `reflectjoin spool` state
        backend: 'direct' loads compiled units in memory; 'file' writes them
            out and reads them back first
    """

    def __init__(self, schemas=None, classes=None, spool=_UNSET, backend='direct'):
        if backend not in ('direct', 'file'):
            raise ValueError(f"unknown backend {backend!r}")
        if classes is not None and schemas is None:
            schemas = classes.schemas
        self.schemas = schemas if schemas is not None else SchemaRegistry()
        self.classes = classes if classes is not None else ClassRegistry(self.schemas)
        if spool is _UNSET:
            enabled, directory = load_spool_state()
            spool = directory if enabled else False
        self.spool_dir = Path(spool) if spool else None
        self.backend = backend
        self._printers = {}
        self._printer_lock = threading.Lock()
        # result classes whose relations have been garbage collected
        self._released = collections.deque()

    def _taken(self, name):
        return name in self.schemas or name in self.classes

    # ---------- pipeline steps ----------

    def element_schema(self, relation):
        """Registered schema of a relation's tuples (registers it when new)."""
        return self.register(relation.schema)

    def register(self, schema):
        try:
            return self.schemas.register(schema)
        except (DuplicateSchema, InvalidSchema) as e:
            raise InvalidJoin(f"join failed: {e.message}", cause=e) from e

    def resolve_interface(self, result_interface):
        if result_interface is None or isinstance(result_interface, SchemaDescriptor):
            return result_interface if result_interface is None else self.register(result_interface)
        try:
            return self.schemas.lookup(result_interface)
        except ReflectJoinError as e:
            raise InvalidJoin(f"join failed: {e.message}", cause=e) from e

    def plan(self, rel1, rel2, result_interface=None):
        """
        Validate the inputs and work out the attribute lists.

        Raises:
            InvalidJoin for non-relation inputs, IncompatibleDomains
        """
        if not isinstance(rel1, TypedRelation) or not isinstance(rel2, TypedRelation):
            raise InvalidJoin("join failed: Invalid input relations")
        left = self.element_schema(rel1)
        right = self.element_schema(rel2)
        interface = self.resolve_interface(result_interface)
        common = common_attributes(left, right)
        union = union_attributes(left, right)
        return JoinPlan(left, right, tuple(common), tuple(union), interface)

    def result_attributes(self, plan):
        """
        Raises:
            InterfaceMismatch
        """
        if plan.interface is None:
            return plan.union
        check_interface(plan.interface, plan.union)
        return plan.interface.attributes

    def generate(self, plan, join_class, result_class):
        """
        Sources of the join class and the result class. With an interface the
        result attributes follow the interface's order.

        Raises:
            InterfaceMismatch
        """
        attributes = self.result_attributes(plan)
        sources = [
            generate_join(join_class, result_class, plan.left, plan.right,
                          plan.common, attributes),
            generate_res_class(result_class, plan.interface, attributes),
        ]
        self.spool([join_class, result_class], sources)
        return sources

    def spool(self, class_names, sources):
        if self.spool_dir is None:
            return
        for name, text in zip(class_names, sources):
            spool_source(self.spool_dir, name, text)

    def compile_units(self, class_names, sources):
        return compile_to_bytes(class_names, sources, self.schemas)

    def load_units(self, units):
        if self.backend == 'file':
            units = _file_roundtrip(units)
        return load_batch(self.classes, units)

    def run_join(self, join_class, rel1, rel2):
        value = self.classes.invoke_static(join_class, 'join', [rel1, rel2])
        return to_relation(value, self.schemas)

    # ---------- public operations ----------

    def nat_join(self, rel1, rel2, timer=None):
        return self.nat_join_with_interface(rel1, rel2, None, timer)

    def nat_join_with_interface(self, rel1, rel2, result_interface=None, timer=None):
        """
        Natural join of two typed relations through generated code.

        Args:
            result_interface: optional schema (or registered name) the result
                tuples must implement
            timer: optional PhaseTimer receiving generate / compileLoad / join

        Raises:
            InvalidJoin wrapping any failure after validation, keeping the
            original kind in `cause_kind`; IncompatibleDomains
        """
        self.evict_released()
        plan = self.plan(rel1, rel2, result_interface)
        join_class = result_class = None
        try:
            with maybe_phase(timer, 'generate'):
                join_class, result_class = unique_id(self._taken), unique_id(self._taken)
                sources = self.generate(plan, join_class, result_class)
            with maybe_phase(timer, 'compileLoad'):
                loaded = self.load_units(self.compile_units([join_class, result_class], sources))
            with maybe_phase(timer, 'join'):
                result = self.run_join(loaded[0], rel1, rel2)
        except (ReflectJoinError, OSError) as e:
            self.classes.unload(join_class)
            self.classes.unload(result_class)
            message = getattr(e, "message", None) or str(e)
            logger.warning(f"Join of {plan.left.class_name} and {plan.right.class_name} failed: "
                           f"{message}")
            raise InvalidJoin(f"join failed: {message}", cause=e) from e
        self.classes.unload(join_class)
        weakref.finalize(result, self._released.append, result_class)
        logger.debug(f"{plan.left.class_name} x {plan.right.class_name} -> "
                     f"{len(result)} {result_class} tuples")
        return result

    def evict_released(self):
        """Unload result classes (and their printers) whose relations are gone."""
        while self._released:
            name = self._released.popleft()
            self.classes.unload(name)
            with self._printer_lock:
                for schema in [s for s in self._printers if s.class_name == name]:
                    self.classes.unload(self._printers.pop(schema).name)
            logger.debug(f"Released result class {name}")

    def printer_for(self, schema):
        with self._printer_lock:
            loaded = self._printers.get(schema)
            if loaded is None or loaded.name not in self.classes:
                class_name = unique_id(self._taken)
                source = generate_print_relation(class_name, schema)
                self.spool([class_name], [source])
                loaded = self.load_units(self.compile_units([class_name], [source]))[0]
                self._printers[schema] = loaded
            return loaded

    def print_relation(self, relation):
        """
        Render a relation, one `attr=value, ...` line per tuple, through a
        generated printer class.

        Raises:
            InvalidArgument for non-relations
            InvalidJoin when generating or running the printer fails, keeping
            the original kind in `cause_kind`
        """
        if not isinstance(relation, TypedRelation):
            raise InvalidArgument("printRelation expects a typed relation")
        schema = self.element_schema(relation)
        lines = []
        try:
            printer = self.printer_for(schema)
            self.classes.invoke_static(printer, 'print', [relation], sink=lines.append)
        except ReflectJoinError as e:
            raise InvalidJoin(f"print failed: {e.message}", cause=e) from e
        return ''.join(line + '\n' for line in lines)


def _file_roundtrip(units):
    """Write units to a scratch directory and read them back."""
    with tempfile.TemporaryDirectory(prefix='reflectjoin-') as scratch:
        paths = []
        for unit in units:
            path = Path(scratch) / f"{unit.class_name}.rjbc"
            path.write_bytes(write_unit(unit))
            paths.append(path)
        return [read_unit(path.read_bytes()) for path in paths]
