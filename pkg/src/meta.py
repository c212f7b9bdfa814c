"""
Meta-level descriptions
=======================
Runtime-inspectable descriptions of tuple types: attributes with a name and a
domain, schemas grouping them under a class name, and a registry that maps
class names to schemas (the `forName` of this engine).
"""

import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from src.errors import DuplicateSchema, SchemaNotFound, IncompatibleDomains, InvalidSchema
from src.logger import get_logger
from src.utils import is_class_name, is_identifier, fingerprint64

logger = get_logger('meta')


class Domain(str, Enum):
    INT = 'int'
    TEXT = 'text'

    @classmethod
    def parse(cls, text):
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InvalidSchema(f"unknown domain {text!r} (expected int or text)")


# 64-bit signed range for INT values
INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1


def value_fits(domain, value):
    """True when a host value is a legal member of the domain."""
    if domain is Domain.INT:
        return type(value) is int and INT_MIN <= value <= INT_MAX
    return type(value) is str


@dataclass(frozen=True)
class AttributeDescriptor:
    name: str
    domain: Domain

    def __post_init__(self):
        if not is_identifier(self.name):
            raise InvalidSchema(f"invalid attribute name {self.name!r}")
        if not isinstance(self.domain, Domain):
            object.__setattr__(self, 'domain', Domain.parse(str(self.domain)))

    def render(self):
        return f"{self.name}:{self.domain.value}"


@dataclass(frozen=True)
class SchemaDescriptor:
    class_name: str
    attributes: tuple
    implements_interface: Optional[str] = None
    _positions: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not is_class_name(self.class_name):
            raise InvalidSchema(f"invalid class name {self.class_name!r}")
        attributes = tuple(self.attributes)
        object.__setattr__(self, 'attributes', attributes)
        names = [a.name for a in attributes]
        if len(set(names)) != len(names):
            raise InvalidSchema(f"duplicate attribute names in {self.class_name}: {names}")
        if self.implements_interface is not None and not is_class_name(self.implements_interface):
            raise InvalidSchema(f"invalid interface name {self.implements_interface!r}")
        object.__setattr__(self, '_positions', {n: i for i, n in enumerate(names)})

    @property
    def attribute_names(self):
        return [a.name for a in self.attributes]

    @property
    def domains(self):
        return [a.domain for a in self.attributes]

    @property
    def arity(self):
        return len(self.attributes)

    def index_of(self, name):
        """Position of an attribute, or None."""
        return self._positions.get(name)

    def attribute(self, name):
        i = self._positions.get(name)
        return None if i is None else self.attributes[i]

    def same_structure(self, other):
        return self.attributes == other.attributes

    def implements(self, name):
        """Cast admissibility: the class itself or its declared interface."""
        return name == self.class_name or name == self.implements_interface

    def extends(self, interface):
        """
        True when the interface's attributes open this schema in the same
        order, so a position taken from the interface reads the same field here.
        """
        return self.attributes[:interface.arity] == interface.attributes

    def declaration(self):
        """Text form `Name(a:int, b:text)` with an optional `implements I`."""
        body = ', '.join(a.render() for a in self.attributes)
        text = f"{self.class_name}({body})"
        if self.implements_interface:
            text += f" implements {self.implements_interface}"
        return text

    def canonical_form(self):
        """Name, attribute names, domains and order; no whitespace."""
        return f"{self.class_name}(" + ','.join(a.render() for a in self.attributes) + ")"

    def fingerprint(self):
        return fingerprint64(self.canonical_form())


_DECL_RE = re.compile(
    r'^\s*([A-Za-z][A-Za-z0-9_]*)\s*\((.*)\)\s*(?:implements\s+([A-Za-z][A-Za-z0-9_]*))?\s*$'
)


def parse_schema_declaration(text):
    """
    Parse `ClassName(attr:domain, ...)` (optionally `implements Iface`).

    Raises:
        InvalidSchema on malformed text
    """
    match = _DECL_RE.match(text)
    if not match:
        raise InvalidSchema(f"malformed schema declaration: {text.strip()!r}")
    class_name, body, interface = match.groups()
    attributes = []
    if body.strip():
        for part in body.split(','):
            if ':' not in part:
                raise InvalidSchema(f"attribute without domain: {part.strip()!r}")
            name, domain = part.split(':', 1)
            attributes.append(AttributeDescriptor(name.strip(), Domain.parse(domain)))
    return SchemaDescriptor(class_name, tuple(attributes), interface)


class SchemaRegistry:
    """className -> SchemaDescriptor. Reads are lock-free; writes are serialized."""

    def __init__(self):
        self._schemas = {}
        self._implementers = {}     # interface name -> implementing class names
        self._lock = threading.Lock()

    def register(self, descriptor):
        """
        Raises:
            DuplicateSchema for a different schema under the same name
            InvalidSchema when an implementer does not open with its interface
        """
        with self._lock:
            existing = self._schemas.get(descriptor.class_name)
            if existing is not None:
                if existing == descriptor:
                    return existing
                raise DuplicateSchema(
                    f"{descriptor.class_name} already registered as {existing.declaration()}"
                )
            self._check_layout(descriptor)
            self._schemas[descriptor.class_name] = descriptor
            if descriptor.implements_interface is not None:
                self._implementers.setdefault(descriptor.implements_interface, set()).add(
                    descriptor.class_name
                )
        logger.debug(f"Registered schema {descriptor.declaration()}")
        return descriptor

    def lookup(self, name):
        try:
            return self._schemas[name]
        except KeyError:
            raise SchemaNotFound(f"no schema named {name!r}")

    def get(self, name):
        return self._schemas.get(name)

    def __contains__(self, name):
        return name in self._schemas

    def names(self):
        return sorted(self._schemas)

    def unregister(self, name):
        with self._lock:
            removed = self._schemas.pop(name, None)
            if removed is not None and removed.implements_interface is not None:
                self._implementers.get(removed.implements_interface, set()).discard(name)

    def _check_layout(self, descriptor):
        pairs = []
        if descriptor.implements_interface is not None:
            interface = self._schemas.get(descriptor.implements_interface)
            if interface is not None:
                pairs.append((descriptor, interface))
        for name in self._implementers.get(descriptor.class_name, ()):
            pairs.append((self._schemas[name], descriptor))
        for implementer, interface in pairs:
            if not implementer.extends(interface):
                raise InvalidSchema(
                    f"{implementer.class_name} must start with the attributes of "
                    f"{interface.declaration()} in the same order"
                )


def register_schema(registry, descriptor):
    """Bind descriptor.class_name; identical re-registration is a no-op."""
    registry.register(descriptor)


def lookup_schema(registry, name):
    """Descriptor registered under name, else SchemaNotFound."""
    return registry.lookup(name)


def common_attributes(s1, s2):
    """
    Attributes present in both schemas with equal name and domain, in s1 order.

    Raises:
        IncompatibleDomains when a shared name has different domains
    """
    common = []
    for attr in s1.attributes:
        other = s2.attribute(attr.name)
        if other is None:
            continue
        if other.domain is not attr.domain:
            raise IncompatibleDomains(
                f"attribute {attr.name!r} is {attr.domain.value} in {s1.class_name} "
                f"but {other.domain.value} in {s2.class_name}"
            )
        common.append(attr)
    return common


def union_attributes(s1, s2):
    """s1's attributes, then s2's non-common attributes; one copy of the overlap."""
    common_names = {a.name for a in common_attributes(s1, s2)}
    return list(s1.attributes) + [a for a in s2.attributes if a.name not in common_names]
