"""Translate checked class declarations into CompiledUnits."""

from src.genlang import syntax as ast
from src.genlang.bytecode import (
    Op, Constant, MethodInfo, CompiledUnit, TAG_INT, TAG_TEXT, TAG_CLASSREF,
    encode_instruction, unit_fingerprint,
)
from src.genlang.types import VOID, format_signature, domain_type
from src.genlang.verifier import analyze_method, method_signatures


class _Label:
    __slots__ = ('offset', 'fixups')

    def __init__(self):
        self.offset = None
        self.fixups = []


class _ConstantPool:
    def __init__(self):
        self.entries = []
        self.index = {}

    def add(self, tag, value):
        key = (tag, type(value), value)
        if key not in self.index:
            self.index[key] = len(self.entries)
            self.entries.append(Constant(tag, value))
        return self.index[key]


class _MethodWriter:
    def __init__(self, pool):
        self.pool = pool
        self.code = bytearray()

    def op(self, op, *args):
        self.code += encode_instruction(op, *args)

    def jump(self, op, label):
        self.op(op, 0)
        label.fixups.append(len(self.code) - 4)

    def place(self, label):
        label.offset = len(self.code)
        for at in label.fixups:
            self.code[at:at + 4] = label.offset.to_bytes(4, 'big')

    def finish(self):
        return bytes(self.code)

    # ---------- statements ----------

    def statements(self, body):
        for stmt in body:
            self.statement(stmt)

    def statement(self, stmt):
        if isinstance(stmt, ast.VarDecl):
            self.expr(stmt.init)
            self.op(Op.STORE, stmt.slot)
        elif isinstance(stmt, ast.Assign):
            if isinstance(stmt.target, ast.Var):
                self.expr(stmt.value)
                self.op(Op.STORE, stmt.target.slot)
            else:
                self.expr(stmt.target.target)
                self.expr(stmt.target.index)
                self.expr(stmt.value)
                self.op(Op.ASTORE)
        elif isinstance(stmt, ast.ExprStmt):
            self.expr(stmt.expr)
            if stmt.expr.type != VOID:
                self.op(Op.POP)
        elif isinstance(stmt, ast.Emit):
            self.expr(stmt.value)
            self.op(Op.EMIT)
        elif isinstance(stmt, ast.Return):
            if stmt.value is None:
                self.op(Op.RETURN_VOID)
            else:
                self.expr(stmt.value)
                self.op(Op.RETURN)
        elif isinstance(stmt, ast.If):
            end = _Label()
            self.expr(stmt.cond)
            self.jump(Op.JUMP_IF_FALSE, end)
            self.statements(stmt.body)
            self.place(end)
        elif isinstance(stmt, ast.For):
            # start and bound are evaluated once, before the first test
            head, end = _Label(), _Label()
            self.expr(stmt.start)
            self.op(Op.STORE, stmt.slot)
            self.expr(stmt.bound)
            self.op(Op.STORE, stmt.bound_slot)
            self.place(head)
            self.op(Op.LOAD, stmt.slot)
            self.op(Op.LOAD, stmt.bound_slot)
            self.op(Op.LT)
            self.jump(Op.JUMP_IF_FALSE, end)
            self.statements(stmt.body)
            self.op(Op.INC, stmt.slot)
            self.jump(Op.JUMP, head)
            self.place(end)
        elif isinstance(stmt, ast.Block):
            self.statements(stmt.body)

    # ---------- expressions ----------

    def classref(self, name):
        return self.pool.add(TAG_CLASSREF, name)

    def expr(self, expr):
        if isinstance(expr, ast.IntLit):
            self.op(Op.CONST, self.pool.add(TAG_INT, expr.value))
        elif isinstance(expr, ast.TextLit):
            self.op(Op.CONST, self.pool.add(TAG_TEXT, expr.value))
        elif isinstance(expr, ast.BoolLit):
            self.op(Op.TRUE if expr.value else Op.FALSE)
        elif isinstance(expr, ast.Var):
            self.op(Op.LOAD, expr.slot)
        elif isinstance(expr, ast.Call):
            for arg in expr.args:
                self.expr(arg)
            self.op(Op.INVOKE, self.pool.add(TAG_TEXT, expr.name), len(expr.args))
        elif isinstance(expr, ast.MemberCall):
            self.expr(expr.target)
            for arg in expr.args:
                self.expr(arg)
            if expr.resolved[0] == 'accessor':
                _, class_name, position = expr.resolved
                self.op(Op.ACCESS, self.classref(class_name), position)
            else:
                self.op({'add': Op.SEQADD, 'size': Op.SEQSIZE, 'get': Op.SEQGET}[expr.resolved[1]])
        elif isinstance(expr, ast.Length):
            self.expr(expr.target)
            self.op(Op.ARRAYLEN)
        elif isinstance(expr, ast.Index):
            self.expr(expr.target)
            self.expr(expr.index)
            self.op(Op.ALOAD)
        elif isinstance(expr, ast.Equals):
            self.expr(expr.left)
            self.expr(expr.right)
            self.op(Op.EQ)
        elif isinstance(expr, ast.And):
            false_label, end = _Label(), _Label()
            self.expr(expr.left)
            self.jump(Op.JUMP_IF_FALSE, false_label)
            self.expr(expr.right)
            self.jump(Op.JUMP, end)
            self.place(false_label)
            self.op(Op.FALSE)
            self.place(end)
        elif isinstance(expr, ast.Concat):
            self.expr(expr.left)
            self.expr(expr.right)
            self.op(Op.CONCAT)
        elif isinstance(expr, ast.Cast):
            self.expr(expr.operand)
            self.op(Op.CAST, self.classref(expr.class_name))
        elif isinstance(expr, ast.NewObject):
            for arg in expr.args:
                self.expr(arg)
            self.op(Op.NEW, self.classref(expr.class_name), len(expr.args))
        elif isinstance(expr, ast.NewArray):
            self.expr(expr.size)
            self.op(Op.NEWARRAY, self.classref(expr.class_name))
        elif isinstance(expr, ast.NewSeq):
            self.op(Op.NEWSEQ, self.classref(expr.class_name))


def generate_unit(decl, schema):
    """
    Emit the unit for a checked ClassDecl.

    Accessors become instance methods `LOAD 0; ACCESS self k; RETURN` listed
    first, in attribute order; the loader rebuilds the schema from them.
    """
    pool = _ConstantPool()
    self_ref = pool.add(TAG_CLASSREF, decl.name)
    methods = []
    for position, attr in enumerate(schema.attributes):
        writer = _MethodWriter(pool)
        writer.op(Op.LOAD, 0)
        writer.op(Op.ACCESS, self_ref, position)
        writer.op(Op.RETURN)
        signature = format_signature(False, (), domain_type(attr.domain))
        methods.append(MethodInfo(attr.name, signature, 1, 1, writer.finish()))

    for method in decl.methods:
        writer = _MethodWriter(pool)
        writer.statements(method.body)
        if method.return_type == VOID and not _ends_with_return(method.body):
            writer.op(Op.RETURN_VOID)
        signature = format_signature(True, [p.param_type for p in method.params],
                                     method.return_type)
        methods.append(MethodInfo(method.name, signature, 0, method.max_locals, writer.finish()))

    draft = CompiledUnit(decl.name, decl.interface, unit_fingerprint(schema),
                         tuple(pool.entries), tuple(methods))
    signatures = method_signatures(draft)
    sized = tuple(
        m if m.max_stack else MethodInfo(
            m.name, m.signature, analyze_method(draft, m, signatures).max_depth,
            m.max_locals, m.code,
        )
        for m in methods
    )
    return CompiledUnit(draft.class_name, draft.interface_name, draft.schema_fingerprint,
                        draft.constants, sized)


def _ends_with_return(body):
    if not body:
        return False
    last = body[-1]
    if isinstance(last, ast.Return):
        return True
    return isinstance(last, ast.Block) and _ends_with_return(last.body)
