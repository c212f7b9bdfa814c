"""
Static checking of parsed GenLang classes.

Besides reporting type errors the checker resolves every name: variables get
local slots, member calls get their target, and each method learns how many
locals it needs. Class references resolve against the classes of the batch
being compiled first, then the schema registry (which also holds the schemas
of every loaded class).
"""

from src.errors import CompilationError, InvalidSchema
from src.genlang import syntax as ast
from src.genlang.types import (
    INT, TEXT, BOOLEAN, VOID, ANY, class_type, array_type, seq_type,
    domain_type, type_domain,
)
from src.meta import AttributeDescriptor, SchemaDescriptor, INT_MIN, INT_MAX


def batch_schema(decl):
    """SchemaDescriptor declared by a class's accessor list."""
    attributes = []
    for accessor in decl.accessors:
        domain = type_domain(accessor.attr_type)
        if domain is None:
            raise CompilationError(
                f"attribute {accessor.name!r} must be int or text, not {accessor.attr_type}",
                'type', accessor.line, decl.name,
            )
        attributes.append(AttributeDescriptor(accessor.name, domain))
    try:
        return SchemaDescriptor(decl.name, tuple(attributes), decl.interface)
    except InvalidSchema as e:
        raise CompilationError(e.message, 'type', decl.line, decl.name)


class _Scope:
    def __init__(self, parent=None):
        self.parent = parent
        self.names = {}

    def find(self, name):
        scope = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None


class _Local:
    __slots__ = ('type', 'slot', 'read_only')

    def __init__(self, type_, slot, read_only=False):
        self.type = type_
        self.slot = slot
        self.read_only = read_only


class TypeChecker:
    def __init__(self, schemas, batch):
        """
        Args:
            schemas: SchemaRegistry used for classes outside the batch
            batch: className -> SchemaDescriptor for the classes being compiled
        """
        self.schemas = schemas
        self.batch = batch
        self.decl = None
        self.method = None
        self.next_slot = 0

    # ---------- helpers ----------

    def error(self, message, line):
        return CompilationError(message, 'type', line, self.decl.name if self.decl else None)

    def schema_of(self, name, line):
        schema = self.batch.get(name) or self.schemas.get(name)
        if schema is None:
            raise self.error(f"unknown class {name!r}", line)
        return schema

    def check_type_exists(self, gtype, line):
        if gtype.is_reference:
            self.schema_of(gtype.name, line)

    def assignable(self, source, target):
        if source == target:
            return True
        if target == ANY:
            return source != VOID
        if source.kind == 'class' and target.kind == 'class':
            schema = self.batch.get(source.name) or self.schemas.get(source.name)
            return schema is not None and schema.implements(target.name)
        return False

    def require(self, expr_type, wanted, line, what):
        if not self.assignable(expr_type, wanted):
            raise self.error(f"{what}: expected {wanted}, found {expr_type}", line)

    def new_slot(self):
        slot = self.next_slot
        self.next_slot += 1
        return slot

    # ---------- classes ----------

    def check_class(self, decl):
        self.decl = decl
        schema = self.batch[decl.name]
        if decl.interface is not None:
            iface = self.schema_of(decl.interface, decl.line)
            for attr in iface.attributes:
                own = schema.attribute(attr.name)
                if own is None or own.domain is not attr.domain:
                    raise self.error(
                        f"{decl.name} does not implement {attr.render()} of {iface.class_name}",
                        decl.line,
                    )
            if not schema.extends(iface):
                raise self.error(
                    f"{decl.name} must declare the attributes of {iface.class_name} first, "
                    f"in the order {', '.join(iface.attribute_names)}",
                    decl.line,
                )
        seen = set(schema.attribute_names)
        self.signatures = {}
        for method in decl.methods:
            if method.name in seen:
                raise self.error(f"duplicate member {method.name!r}", method.line)
            seen.add(method.name)
            for param in method.params:
                if param.param_type == VOID:
                    raise self.error(f"parameter {param.name!r} cannot be void", param.line)
                self.check_type_exists(param.param_type, param.line)
            self.check_type_exists(method.return_type, method.line)
            self.signatures[method.name] = method
        for method in decl.methods:
            self.check_method(method)

    def check_method(self, method):
        self.method = method
        self.next_slot = 0
        scope = _Scope()
        for param in method.params:
            if param.name in scope.names:
                raise self.error(f"duplicate parameter {param.name!r}", param.line)
            scope.names[param.name] = _Local(param.param_type, self.new_slot())
        self.check_body(method.body, scope)
        if method.return_type != VOID and not self.definitely_returns(method.body):
            raise self.error(f"method {method.name!r} may finish without returning a value",
                             method.line)
        method.max_locals = self.next_slot

    def definitely_returns(self, body):
        for stmt in body:
            if isinstance(stmt, ast.Return):
                return True
            if isinstance(stmt, ast.Block) and self.definitely_returns(stmt.body):
                return True
        return False

    # ---------- statements ----------

    def check_body(self, body, scope):
        for i, stmt in enumerate(body):
            self.check_statement(stmt, scope)
            ends = isinstance(stmt, ast.Return) or (
                isinstance(stmt, ast.Block) and self.definitely_returns(stmt.body))
            if ends and i + 1 < len(body):
                raise self.error("unreachable statement", body[i + 1].line)

    def declare(self, scope, name, type_, line, read_only=False):
        if scope.find(name) is not None:
            raise self.error(f"variable {name!r} is already defined", line)
        local = _Local(type_, self.new_slot(), read_only)
        scope.names[name] = local
        return local

    def check_statement(self, stmt, scope):
        if isinstance(stmt, ast.VarDecl):
            if stmt.var_type in (VOID, ANY):
                raise self.error(f"local {stmt.name!r} cannot have type {stmt.var_type}", stmt.line)
            self.check_type_exists(stmt.var_type, stmt.line)
            self.require(self.check_expr(stmt.init, scope), stmt.var_type, stmt.line,
                         f"initializer of {stmt.name!r}")
            stmt.slot = self.declare(scope, stmt.name, stmt.var_type, stmt.line).slot

        elif isinstance(stmt, ast.Assign):
            value_type = self.check_expr(stmt.value, scope)
            if isinstance(stmt.target, ast.Var):
                local = scope.find(stmt.target.name)
                if local is None:
                    raise self.error(f"unknown variable {stmt.target.name!r}", stmt.line)
                if local.read_only:
                    raise self.error(f"loop variable {stmt.target.name!r} is read-only", stmt.line)
                stmt.target.slot = local.slot
                stmt.target.type = local.type
                self.require(value_type, local.type, stmt.line, "assignment")
            else:
                element = self.check_expr(stmt.target, scope)
                self.require(value_type, element, stmt.line, "array store")

        elif isinstance(stmt, ast.ExprStmt):
            if not isinstance(stmt.expr, (ast.Call, ast.MemberCall)):
                raise self.error("expression is not a statement", stmt.line)
            self.check_expr(stmt.expr, scope)

        elif isinstance(stmt, ast.Emit):
            value_type = self.check_expr(stmt.value, scope)
            if not value_type.is_primitive:
                raise self.error(f"emit expects int, text or boolean, found {value_type}", stmt.line)

        elif isinstance(stmt, ast.Return):
            wanted = self.method.return_type
            if stmt.value is None:
                if wanted != VOID:
                    raise self.error(f"return without value in method returning {wanted}", stmt.line)
            else:
                if wanted == VOID:
                    raise self.error("return with value in void method", stmt.line)
                self.require(self.check_expr(stmt.value, scope), wanted, stmt.line, "return")

        elif isinstance(stmt, ast.If):
            self.require(self.check_expr(stmt.cond, scope), BOOLEAN, stmt.line, "if condition")
            self.check_body(stmt.body, _Scope(scope))

        elif isinstance(stmt, ast.For):
            self.require(self.check_expr(stmt.start, scope), INT, stmt.line, "loop start")
            self.require(self.check_expr(stmt.bound, scope), INT, stmt.line, "loop bound")
            inner = _Scope(scope)
            stmt.slot = self.declare(inner, stmt.var, INT, stmt.line, read_only=True).slot
            stmt.bound_slot = self.new_slot()
            self.check_body(stmt.body, inner)

        elif isinstance(stmt, ast.Block):
            self.check_body(stmt.body, _Scope(scope))

        else:
            raise self.error(f"unsupported statement {type(stmt).__name__}", stmt.line)

    # ---------- expressions ----------

    def check_expr(self, expr, scope):
        expr.type = self._expr_type(expr, scope)
        return expr.type

    def _expr_type(self, expr, scope):
        if isinstance(expr, ast.IntLit):
            if not INT_MIN <= expr.value <= INT_MAX:
                raise self.error(f"integer literal {expr.value} out of range", expr.line)
            return INT
        if isinstance(expr, ast.TextLit):
            return TEXT
        if isinstance(expr, ast.BoolLit):
            return BOOLEAN

        if isinstance(expr, ast.Var):
            local = scope.find(expr.name)
            if local is None:
                raise self.error(f"unknown variable {expr.name!r}", expr.line)
            expr.slot = local.slot
            return local.type

        if isinstance(expr, ast.Call):
            callee = self.signatures.get(expr.name)
            if callee is None:
                raise self.error(f"no static method {expr.name!r} in {self.decl.name}", expr.line)
            if len(expr.args) != len(callee.params):
                raise self.error(
                    f"{expr.name} takes {len(callee.params)} arguments, {len(expr.args)} given",
                    expr.line,
                )
            for arg, param in zip(expr.args, callee.params):
                self.require(self.check_expr(arg, scope), param.param_type, expr.line,
                             f"argument {param.name!r} of {expr.name}")
            return callee.return_type

        if isinstance(expr, ast.MemberCall):
            return self._member_call_type(expr, scope)

        if isinstance(expr, ast.Length):
            target = self.check_expr(expr.target, scope)
            if target.kind != 'array':
                raise self.error(f".length on non-array {target}", expr.line)
            return INT

        if isinstance(expr, ast.Index):
            target = self.check_expr(expr.target, scope)
            if target.kind != 'array':
                raise self.error(f"indexing non-array {target}", expr.line)
            self.require(self.check_expr(expr.index, scope), INT, expr.line, "array index")
            return class_type(target.name)

        if isinstance(expr, ast.Equals):
            left = self.check_expr(expr.left, scope)
            right = self.check_expr(expr.right, scope)
            if left != right or not left.is_primitive:
                raise self.error(f"cannot compare {left} with {right}", expr.line)
            return BOOLEAN

        if isinstance(expr, ast.And):
            self.require(self.check_expr(expr.left, scope), BOOLEAN, expr.line, "'&&' operand")
            self.require(self.check_expr(expr.right, scope), BOOLEAN, expr.line, "'&&' operand")
            return BOOLEAN

        if isinstance(expr, ast.Concat):
            left = self.check_expr(expr.left, scope)
            right = self.check_expr(expr.right, scope)
            if left != TEXT:
                raise self.error(f"'+' needs text on the left, found {left}", expr.line)
            if not right.is_primitive:
                raise self.error(f"cannot append {right} to text", expr.line)
            return TEXT

        if isinstance(expr, ast.Cast):
            self.schema_of(expr.class_name, expr.line)
            operand = self.check_expr(expr.operand, scope)
            if operand != ANY:
                raise self.error(f"only any can be cast, found {operand}", expr.line)
            return array_type(expr.class_name)

        if isinstance(expr, ast.NewObject):
            schema = self.schema_of(expr.class_name, expr.line)
            if len(expr.args) != schema.arity:
                raise self.error(
                    f"constructor of {expr.class_name} takes {schema.arity} arguments, "
                    f"{len(expr.args)} given", expr.line,
                )
            for arg, attr in zip(expr.args, schema.attributes):
                self.require(self.check_expr(arg, scope), domain_type(attr.domain), expr.line,
                             f"constructor argument {attr.name!r}")
            return class_type(expr.class_name)

        if isinstance(expr, ast.NewArray):
            self.schema_of(expr.class_name, expr.line)
            self.require(self.check_expr(expr.size, scope), INT, expr.line, "array size")
            return array_type(expr.class_name)

        if isinstance(expr, ast.NewSeq):
            self.schema_of(expr.class_name, expr.line)
            return seq_type(expr.class_name)

        raise self.error(f"unsupported expression {type(expr).__name__}", expr.line)

    def _member_call_type(self, expr, scope):
        target = self.check_expr(expr.target, scope)
        if target.kind == 'class':
            schema = self.schema_of(target.name, expr.line)
            position = schema.index_of(expr.name)
            if position is None:
                raise self.error(f"{target.name} has no attribute {expr.name!r}", expr.line)
            if expr.args:
                raise self.error(f"accessor {expr.name} takes no arguments", expr.line)
            expr.resolved = ('accessor', target.name, position)
            return domain_type(schema.attributes[position].domain)

        if target.kind == 'seq':
            element = class_type(target.name)
            if expr.name == 'add' and len(expr.args) == 1:
                self.require(self.check_expr(expr.args[0], scope), element, expr.line, "seq add")
                expr.resolved = ('seq', 'add')
                return VOID
            if expr.name == 'size' and not expr.args:
                expr.resolved = ('seq', 'size')
                return INT
            if expr.name == 'get' and len(expr.args) == 1:
                self.require(self.check_expr(expr.args[0], scope), INT, expr.line, "seq index")
                expr.resolved = ('seq', 'get')
                return element
            raise self.error(f"seq has no operation {expr.name}/{len(expr.args)}", expr.line)

        raise self.error(f"cannot call {expr.name!r} on {target}", expr.line)


def check_batch(decls, schemas):
    """
    Type-check a batch of class declarations together.

    Returns:
        dict className -> SchemaDescriptor for the batch
    """
    batch = {}
    for decl in decls:
        if decl.name in batch:
            raise CompilationError(f"class {decl.name} defined twice", 'type', decl.line, decl.name)
        if decl.name in schemas:
            raise CompilationError(f"class {decl.name} is already defined", 'type',
                                   decl.line, decl.name)
        batch[decl.name] = batch_schema(decl)
    checker = TypeChecker(schemas, batch)
    for decl in decls:
        checker.check_class(decl)
    return batch
