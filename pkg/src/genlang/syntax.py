"""
GenLang syntax tree.

Expression nodes carry a `type` slot filled in by the type checker; codegen
only ever sees checked trees.
"""

from dataclasses import dataclass, field
from typing import Optional


# ---------- expressions ----------

@dataclass
class Expr:
    line: int
    type: object = field(default=None, init=False, compare=False)


@dataclass
class IntLit(Expr):
    value: int = 0


@dataclass
class TextLit(Expr):
    value: str = ''


@dataclass
class BoolLit(Expr):
    value: bool = False


@dataclass
class Var(Expr):
    name: str = ''
    slot: int = field(default=-1, compare=False)


@dataclass
class Call(Expr):
    """Unqualified call of a static method of the enclosing class."""
    name: str = ''
    args: list = field(default_factory=list)


@dataclass
class MemberCall(Expr):
    """target.name(args): an accessor, or add/size/get on a sequence."""
    target: Expr = None
    name: str = ''
    args: list = field(default_factory=list)
    # ('accessor', class_name, position) or ('seq', op), set by the checker
    resolved: tuple = field(default=None, compare=False)


@dataclass
class Length(Expr):
    target: Expr = None


@dataclass
class Index(Expr):
    target: Expr = None
    index: Expr = None


@dataclass
class Equals(Expr):
    left: Expr = None
    right: Expr = None


@dataclass
class And(Expr):
    left: Expr = None
    right: Expr = None


@dataclass
class Concat(Expr):
    left: Expr = None
    right: Expr = None


@dataclass
class Cast(Expr):
    """(C[]) operand; the only cast form."""
    class_name: str = ''
    operand: Expr = None


@dataclass
class NewObject(Expr):
    class_name: str = ''
    args: list = field(default_factory=list)


@dataclass
class NewArray(Expr):
    class_name: str = ''
    size: Expr = None


@dataclass
class NewSeq(Expr):
    class_name: str = ''


# ---------- statements ----------

@dataclass
class Stmt:
    line: int


@dataclass
class VarDecl(Stmt):
    var_type: object = None
    name: str = ''
    init: Expr = None
    slot: int = field(default=-1, compare=False)


@dataclass
class Assign(Stmt):
    """name = value, or target[index] = value."""
    target: Expr = None
    value: Expr = None


@dataclass
class ExprStmt(Stmt):
    expr: Expr = None


@dataclass
class Emit(Stmt):
    value: Expr = None


@dataclass
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass
class If(Stmt):
    cond: Expr = None
    body: list = field(default_factory=list)


@dataclass
class For(Stmt):
    """for (int var = start; var < bound; var++) body"""
    var: str = ''
    start: Expr = None
    bound: Expr = None
    body: list = field(default_factory=list)
    slot: int = field(default=-1, compare=False)
    bound_slot: int = field(default=-1, compare=False)


@dataclass
class Block(Stmt):
    body: list = field(default_factory=list)


# ---------- declarations ----------

@dataclass
class Param:
    param_type: object
    name: str
    line: int


@dataclass
class AccessorDecl:
    """`text name();` declares one attribute of the class."""
    attr_type: object
    name: str
    line: int


@dataclass
class MethodDecl:
    name: str
    params: list
    return_type: object
    body: list
    line: int
    max_locals: int = field(default=0, compare=False)


@dataclass
class ClassDecl:
    name: str
    interface: Optional[str]
    accessors: list
    methods: list
    line: int
