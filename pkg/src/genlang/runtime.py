"""
Values that exist only inside the VM, and the conversions at its boundary.

Tuples are plain relations.TupleValue objects; arrays and sequences are
mutable containers tagged with their element class.
"""

import contextvars

from src.errors import ClassCastError, NullReferenceError, ArrayBoundsError
from src.relations import TupleValue, TypedRelation


class ObjectArray:
    """Fixed-length array of tuples of one class; slots start out null."""
    __slots__ = ('element', 'items')

    def __init__(self, element, items):
        self.element = element
        self.items = items

    def __len__(self):
        return len(self.items)

    def __repr__(self):
        return f"{self.element}[{len(self.items)}]"


class SeqValue:
    """Growable sequence of tuples of one class."""
    __slots__ = ('element', 'items')

    def __init__(self, element, items=None):
        self.element = element
        self.items = [] if items is None else items

    def __repr__(self):
        return f"seq<{self.element}>({len(self.items)})"


def new_array(element, size):
    if size < 0:
        raise ArrayBoundsError(f"negative array size {size}")
    return ObjectArray(element, [None] * size)


def bounds_error(index, length):
    return ArrayBoundsError(f"index {index} out of bounds for length {length}")


def null_error(what):
    return NullReferenceError(f"null {what}")


def render_value(value):
    """Text form of a primitive appended to text."""
    if value is True:
        return 'true'
    if value is False:
        return 'false'
    return value if type(value) is str else str(value)


def check_cast(value, target, schemas):
    """
    any -> target[]: the value must be an array whose element class is the
    target or declares it as interface.
    """
    if value is None:
        raise NullReferenceError(f"cast of null to {target}[]")
    if type(value) is not ObjectArray:
        raise ClassCastError(f"{type_name(value)} cannot be cast to {target}[]")
    if value.element != target:
        element = schemas.get(value.element)
        if element is None or not element.implements(target):
            raise ClassCastError(f"{value.element}[] cannot be cast to {target}[]")
    return value


def type_name(value):
    if value is None:
        return 'null'
    if type(value) is bool:
        return 'boolean'
    if type(value) is int:
        return 'int'
    if type(value) is str:
        return 'text'
    if type(value) is TupleValue:
        return value.class_name
    if type(value) is ObjectArray:
        return f"{value.element}[]"
    if type(value) is SeqValue:
        return f"seq<{value.element}>"
    return type(value).__name__


def to_vm(value):
    """Host value -> VM value. Typed relations become arrays of their tuples."""
    if isinstance(value, TypedRelation):
        return ObjectArray(value.schema.class_name, list(value.tuples))
    return value


def to_relation(value, schemas):
    """
    VM array -> TypedRelation over the element class's registered schema.

    Raises:
        ClassCastError when the value is not an array
        NullReferenceError when a slot was never filled
    """
    if type(value) is not ObjectArray:
        raise ClassCastError(f"expected an array of tuples, got {type_name(value)}")
    if any(item is None for item in value.items):
        raise NullReferenceError(f"{value.element}[] result contains null slots")
    return TypedRelation(schemas.lookup(value.element), tuple(value.items))


# Destination of `emit` statements for the current invocation
_sink = contextvars.ContextVar('genlang_emit_sink', default=None)


def emit(value):
    sink = _sink.get()
    if sink is not None:
        sink(render_value(value))


def set_sink(sink):
    return _sink.set(sink)


def reset_sink(token):
    _sink.reset(token)
