"""
GenLang virtual machine
=======================
Loads verified units into a ClassRegistry and runs their static methods.

Two execution tiers share the same loader and the same observable
behaviour:

* interpret - a stack interpreter stepping over decoded instructions.
* translate - each method is translated once, at link time, into a Python
  function in which stack slots and locals become Python locals. This is the
  default tier (RJ_VM_MODE).

Failures a well-typed program may legitimately hit (bad cast, array bounds,
null tuple) raise GenLangRuntimeError subclasses. Anything else that goes
wrong while executing verified code is a VmFault.
"""

import threading

from src.config import VM_MODE
from src.errors import (
    ReflectJoinError, ClassFormatError, ClassNotFound, NoSuchMethod, VmFault,
    ClassCastError, StackOverflowError,
)
from src.genlang.bytecode import Op, TAG_CLASSREF, unit_fingerprint
from src.genlang.runtime import (
    ObjectArray, SeqValue, new_array, bounds_error, null_error, render_value,
    check_cast, emit, set_sink, reset_sink, to_vm, type_name,
)
from src.genlang.translator import translate_class
from src.genlang.types import VOID, INT, TEXT, BOOLEAN, ANY, type_domain
from src.genlang.verifier import verify_unit, method_signatures, analyze_method
from src.logger import get_logger
from src.meta import AttributeDescriptor, SchemaDescriptor, INT_MIN, INT_MAX
from src.relations import TupleValue, make_tuple

logger = get_logger('genlang')

MAX_CALL_DEPTH = 256
VM_MODES = ('translate', 'interpret')


class RuntimeMethod:
    __slots__ = ('name', 'static', 'params', 'ret', 'info', 'analysis',
                 'program', 'function')

    def __init__(self, info, signature, analysis):
        self.name = info.name
        self.static, self.params, self.ret = signature
        self.info = info
        self.analysis = analysis
        self.program = None
        self.function = None

    @property
    def arity(self):
        return len(self.params)


class LoadedClass:
    """A unit that passed verification, bound into a ClassRegistry."""

    def __init__(self, unit, schema, methods, owns_schema):
        self.unit = unit
        self.name = unit.class_name
        self.schema = schema
        self.interface_name = unit.interface_name
        self.methods = methods
        self.owns_schema = owns_schema
        self.linked = False
        self.translated_source = None

    def method(self, name):
        return self.methods.get(name)

    def __repr__(self):
        return f"LoadedClass({self.schema.declaration()})"


def _schema_from_unit(unit, signatures):
    attributes = []
    for method in unit.methods:
        static, _, ret = signatures[method.name]
        if not static:
            attributes.append(AttributeDescriptor(method.name, type_domain(ret)))
    return SchemaDescriptor(unit.class_name, tuple(attributes), unit.interface_name)


class ClassRegistry:
    """
    className -> LoadedClass, backed by a SchemaRegistry that receives the
    schema of every loaded class. Loading and linking are serialized; invoking
    is not.
    """

    def __init__(self, schemas, mode=None):
        mode = mode or VM_MODE
        if mode not in VM_MODES:
            raise ValueError(f"unknown VM mode {mode!r}")
        self.schemas = schemas
        self.mode = mode
        self._classes = {}
        self._lock = threading.RLock()

    def __contains__(self, name):
        return name in self._classes

    def get(self, name):
        return self._classes.get(name)

    def names(self):
        return sorted(self._classes)

    def __len__(self):
        return len(self._classes)

    # ---------- loading ----------

    def load(self, unit, resolve=True):
        """
        Verify and register a unit. A name that is already loaded returns the
        loaded class unchanged.

        Raises:
            ClassFormatError, ClassNotFound (only when resolve is True)
        """
        with self._lock:
            existing = self._classes.get(unit.class_name)
            if existing is not None:
                if resolve:
                    self.link(existing)
                return existing

            verify_unit(unit)
            signatures = method_signatures(unit)
            schema = _schema_from_unit(unit, signatures)
            if unit_fingerprint(schema) != unit.schema_fingerprint:
                raise ClassFormatError(f"{unit.class_name}: schema fingerprint mismatch")
            prior = self.schemas.get(unit.class_name)
            if prior is not None and prior != schema:
                raise ClassFormatError(
                    f"{unit.class_name} clashes with registered schema {prior.declaration()}"
                )
            methods = {
                m.name: RuntimeMethod(m, signatures[m.name], analyze_method(unit, m, signatures))
                for m in unit.methods
            }
            loaded = LoadedClass(unit, schema, methods, owns_schema=prior is None)
            self.schemas.register(schema)
            self._classes[unit.class_name] = loaded
            logger.debug(f"Loaded class {schema.declaration()}")
            if resolve:
                try:
                    self.link(loaded)
                except Exception:
                    self.unload(unit.class_name)
                    raise
            return loaded

    def unload(self, name):
        with self._lock:
            loaded = self._classes.pop(name, None)
            if loaded is not None and loaded.owns_schema:
                self.schemas.unregister(name)

    def clear(self):
        with self._lock:
            for name in list(self._classes):
                self.unload(name)

    def link(self, loaded):
        """
        Resolve class references and prepare the execution tier.

        Raises:
            ClassNotFound for a referenced class or interface with no schema
            ClassFormatError for an interface layout, accessor positions or
            constructor arity that do not match the referenced schema
        """
        with self._lock:
            if loaded.linked:
                return
            unit = loaded.unit
            for const in unit.constants:
                if const.tag == TAG_CLASSREF and const.value not in self.schemas:
                    raise ClassNotFound(f"{unit.class_name} refers to unknown class {const.value}")
            if unit.interface_name is not None:
                interface = self.schemas.get(unit.interface_name)
                if interface is None:
                    raise ClassNotFound(
                        f"{unit.class_name} implements unknown interface {unit.interface_name}"
                    )
                if not loaded.schema.extends(interface):
                    raise ClassFormatError(
                        f"{unit.class_name} does not start with the attributes of "
                        f"{interface.declaration()}"
                    )
            accessor_index = 0
            for method in loaded.methods.values():
                for instr in method.analysis.instructions:
                    self._link_instruction(loaded, method, instr, accessor_index)
                if not method.static:
                    accessor_index += 1
            if self.mode == 'translate':
                translate_class(self.schemas, loaded)
            else:
                for method in loaded.methods.values():
                    method.program = _decode_program(loaded, method)
            loaded.linked = True

    def _link_instruction(self, loaded, method, instr, accessor_index):
        unit = loaded.unit
        if instr.op is Op.ACCESS:
            target = self.schemas.lookup(unit.constants[instr.args[0]].value)
            if instr.args[1] >= target.arity:
                raise ClassFormatError(
                    f"{unit.class_name}.{method.name}: {target.class_name} has no attribute "
                    f"#{instr.args[1]}"
                )
            if not method.static and (target.class_name != unit.class_name
                                      or instr.args[1] != accessor_index):
                raise ClassFormatError(
                    f"{unit.class_name}.{method.name}: accessor reads the wrong attribute"
                )
        elif instr.op is Op.NEW:
            target = self.schemas.lookup(unit.constants[instr.args[0]].value)
            if instr.args[1] != target.arity:
                raise ClassFormatError(
                    f"{unit.class_name}.{method.name}: {target.class_name} constructor takes "
                    f"{target.arity} values, not {instr.args[1]}"
                )

    def resolve(self, name):
        """Loaded class by name, else ClassNotFound."""
        loaded = self._classes.get(name)
        if loaded is None:
            raise ClassNotFound(f"no loaded class named {name!r}")
        return loaded

    # ---------- running ----------

    def invoke_static(self, loaded, method_name, args, sink=None):
        """
        Run a static method. Typed relations in `args` are passed as arrays.

        Args:
            sink: callable receiving each emitted line of text

        Raises:
            NoSuchMethod, ClassNotFound, GenLangRuntimeError subclasses, VmFault
        """
        if isinstance(loaded, str):
            loaded = self.resolve(loaded)
        method = loaded.method(method_name)
        if method is None or not method.static:
            raise NoSuchMethod(f"{loaded.name} has no static method {method_name!r}")
        args = [to_vm(a) for a in args]
        if len(args) != method.arity:
            raise NoSuchMethod(
                f"{loaded.name}.{method_name} takes {method.arity} arguments, {len(args)} given"
            )
        for position, (value, param) in enumerate(zip(args, method.params)):
            if not self._conforms(value, param):
                raise ClassCastError(
                    f"argument {position} of {loaded.name}.{method_name}: expected {param}, "
                    f"got {type_name(value)}"
                )
        if not loaded.linked:
            self.link(loaded)

        token = set_sink(sink)
        try:
            if self.mode == 'translate':
                return method.function(*args)
            return self._run(loaded, method, args)
        finally:
            reset_sink(token)

    def _conforms(self, value, gtype):
        if value is None:
            return False
        if gtype == ANY:
            return True
        if gtype == INT:
            return type(value) is int and INT_MIN <= value <= INT_MAX
        if gtype == TEXT:
            return type(value) is str
        if gtype == BOOLEAN:
            return type(value) is bool
        if gtype.kind == 'class':
            element = value.class_name if type(value) is TupleValue else None
        elif gtype.kind == 'array':
            element = value.element if type(value) is ObjectArray else None
        else:
            element = value.element if type(value) is SeqValue else None
        if element is None:
            return False
        schema = self.schemas.get(element)
        return element == gtype.name or (schema is not None and schema.implements(gtype.name))

    def _run(self, loaded, method, args):
        try:
            return _interpret(self.schemas, method, args, 0)
        except ReflectJoinError:
            raise
        except RecursionError:
            raise StackOverflowError(f"call depth exceeded in {loaded.name}.{method.name}")
        except Exception as exc:
            raise VmFault(f"{loaded.name}.{method.name}: {type(exc).__name__}: {exc}")

    def instantiate(self, loaded, values):
        """
        Construct one tuple of a loaded class.

        Raises:
            ArityError, DomainError
        """
        if isinstance(loaded, str):
            loaded = self.resolve(loaded)
        return make_tuple(loaded.schema, values)


# ---------- interpreter tier ----------

def _decode_program(loaded, method):
    """Decoded instructions with constants, class names and targets resolved."""
    instructions = method.analysis.instructions
    index_of = {instr.offset: i for i, instr in enumerate(instructions)}
    constants = loaded.unit.constants
    program = []
    for instr in instructions:
        op, args = instr.op, instr.args
        if op is Op.CONST:
            program.append((op, constants[args[0]].value, None))
        elif op in (Op.ACCESS, Op.NEW):
            program.append((op, constants[args[0]].value, args[1]))
        elif op in (Op.CAST, Op.NEWARRAY, Op.NEWSEQ):
            program.append((op, constants[args[0]].value, None))
        elif op is Op.INVOKE:
            program.append((op, loaded.methods[constants[args[0]].value], args[1]))
        elif op in (Op.JUMP, Op.JUMP_IF_FALSE):
            program.append((op, index_of[args[0]], None))
        else:
            program.append((op, args[0] if args else None, None))
    return program


def _interpret(schemas, method, args, depth):
    if depth > MAX_CALL_DEPTH:
        raise StackOverflowError(f"call depth exceeded in {method.name}")
    program = method.program
    local = list(args) + [None] * (method.info.max_locals - len(args))
    stack = []
    push = stack.append
    pop = stack.pop
    pc = 0
    while True:
        op, a, b = program[pc]
        pc += 1
        if op is Op.LOAD:
            push(local[a])
        elif op is Op.STORE:
            local[a] = pop()
        elif op is Op.ACCESS:
            obj = stack[-1]
            if obj is None:
                raise null_error(f"tuple reading attribute #{b} of {a}")
            stack[-1] = obj.values[b]
        elif op is Op.ALOAD:
            index = pop()
            items = stack[-1].items
            if not 0 <= index < len(items):
                raise bounds_error(index, len(items))
            stack[-1] = items[index]
        elif op is Op.JUMP_IF_FALSE:
            if not pop():
                pc = a
        elif op is Op.JUMP:
            pc = a
        elif op is Op.INC:
            local[a] += 1
        elif op is Op.LT:
            right = pop()
            stack[-1] = stack[-1] < right
        elif op is Op.EQ:
            right = pop()
            stack[-1] = stack[-1] == right
        elif op is Op.INVOKE:
            if b:
                call_args = stack[-b:]
                del stack[-b:]
            else:
                call_args = []
            result = _interpret(schemas, a, call_args, depth + 1)
            if a.ret != VOID:
                push(result)
        elif op is Op.RETURN:
            return pop()
        elif op is Op.RETURN_VOID:
            return None
        elif op is Op.CONST:
            push(a)
        elif op is Op.TRUE:
            push(True)
        elif op is Op.FALSE:
            push(False)
        elif op is Op.POP:
            pop()
        elif op is Op.DUP:
            push(stack[-1])
        elif op is Op.CONCAT:
            right = pop()
            stack[-1] = stack[-1] + render_value(right)
        elif op is Op.CAST:
            check_cast(stack[-1], a, schemas)
        elif op is Op.NEW:
            if b:
                values = tuple(stack[-b:])
                del stack[-b:]
            else:
                values = ()
            push(TupleValue(a, values))
        elif op is Op.NEWARRAY:
            stack[-1] = new_array(a, stack[-1])
        elif op is Op.ARRAYLEN:
            stack[-1] = len(stack[-1].items)
        elif op is Op.ASTORE:
            value = pop()
            index = pop()
            items = pop().items
            if not 0 <= index < len(items):
                raise bounds_error(index, len(items))
            items[index] = value
        elif op is Op.NEWSEQ:
            push(SeqValue(a))
        elif op is Op.SEQADD:
            value = pop()
            pop().items.append(value)
        elif op is Op.SEQSIZE:
            stack[-1] = len(stack[-1].items)
        elif op is Op.SEQGET:
            index = pop()
            items = stack[-1].items
            if not 0 <= index < len(items):
                raise bounds_error(index, len(items))
            stack[-1] = items[index]
        elif op is Op.EMIT:
            emit(pop())
        elif op is Op.NOP:
            pass
        else:
            raise VmFault(f"unhandled opcode {op!r}")
