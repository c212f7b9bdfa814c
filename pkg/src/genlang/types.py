"""GenLang static types."""

import re
from dataclasses import dataclass

from src.meta import Domain


@dataclass(frozen=True)
class GType:
    kind: str           # int, text, boolean, void, any, class, array, seq
    name: str = None    # class name for class / array / seq

    def __str__(self):
        if self.kind == 'class':
            return self.name
        if self.kind == 'array':
            return f"{self.name}[]"
        if self.kind == 'seq':
            return f"seq<{self.name}>"
        return self.kind

    @property
    def is_primitive(self):
        return self.kind in ('int', 'text', 'boolean')

    @property
    def is_reference(self):
        return self.kind in ('class', 'array', 'seq')


INT = GType('int')
TEXT = GType('text')
BOOLEAN = GType('boolean')
VOID = GType('void')
ANY = GType('any')


def class_type(name):
    return GType('class', name)


def array_type(name):
    return GType('array', name)


def seq_type(name):
    return GType('seq', name)


def domain_type(domain):
    return INT if domain is Domain.INT else TEXT


def type_domain(gtype):
    if gtype == INT:
        return Domain.INT
    if gtype == TEXT:
        return Domain.TEXT
    return None


_NAME = r'[A-Za-z][A-Za-z0-9_]*'
_TYPE_RE = re.compile(rf'^(?:(int|text|boolean|any|void)|seq<({_NAME})>|({_NAME})(\[\])?)$')


def parse_type(text):
    """Inverse of str(GType); None when malformed."""
    match = _TYPE_RE.match(text)
    if not match:
        return None
    prim, seq_name, cls_name, brackets = match.groups()
    if prim:
        return GType(prim)
    if seq_name:
        return seq_type(seq_name)
    return array_type(cls_name) if brackets else class_type(cls_name)


def format_signature(static, params, ret):
    """`S(int,text)boolean` for static methods, `A()int` for accessors."""
    return ('S' if static else 'A') + '(' + ','.join(str(p) for p in params) + ')' + str(ret)


def parse_signature(text):
    """
    (static, params, ret) or None when malformed.

    void is only legal as a return type.
    """
    if len(text) < 4 or text[0] not in 'SA' or text[1] != '(':
        return None
    close = text.find(')')
    if close < 0:
        return None
    inner, ret_text = text[2:close], text[close + 1:]
    params = []
    if inner:
        for part in inner.split(','):
            t = parse_type(part)
            if t is None or t == VOID:
                return None
            params.append(t)
    ret = parse_type(ret_text)
    if ret is None:
        return None
    return text[0] == 'S', tuple(params), ret
